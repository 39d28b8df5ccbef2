// Copyright (c) 2026 DIVE contributors
// SPDX-License-Identifier: Apache-2.0
//
// `dive` - data generation, training, evaluation, ablation and rendering
// for the DIVE generative video model.

#include <CLI11.hpp>

#include "dive/cli.hpp"
#include "dive/data/net_fetch.hpp"

using namespace dive;

int main(int argc, char** argv) {
    CLI::App app{"DIVE: disentangled video model with missing-data imputation"};
    app.require_subcommand(1);

    cli::GenerateArgs gen;
    auto* cmd_gen = app.add_subcommand("generate-data", "write a frozen dataset container");
    cmd_gen->add_option("--scenario", gen.scenario, "missing-data scenario (1, 2 or 3)")
        ->required()
        ->check(CLI::Range(1, 3));
    cmd_gen->add_option("--count", gen.count, "number of sequences")->required();
    cmd_gen->add_option("--seed", gen.seed, "base seed");
    cmd_gen->add_option("--out", gen.out, "output container path")->required();
    cmd_gen->add_option("--glyph-source", gen.glyph_source, "builtin|mnist");
    cmd_gen->add_option("--mnist-dir", gen.mnist_dir, "directory with MNIST IDX files");
    cmd_gen->add_option("--num-objects", gen.num_objects, "objects per scene");
    cmd_gen->add_option("--seq-len", gen.seq_len, "frames per sequence");
    cmd_gen->add_flag("--force", gen.force, "overwrite an existing output");

    cli::TrainArgs tr;
    auto* cmd_train = app.add_subcommand("train", "train a model");
    cmd_train->add_option("--config", tr.config_path, "training config JSON");
    cmd_train->add_option("--out-dir", tr.out_dir, "run directory");
    cmd_train->add_option("--resume", tr.resume, "checkpoint .bin to resume from");
    cmd_train->add_option("--mnist-dir", tr.mnist_dir, "directory with MNIST IDX files");
    cmd_train->add_flag("--quiet", tr.quiet, "suppress progress lines");

    cli::EvalArgs ev;
    auto* cmd_eval = app.add_subcommand("evaluate", "evaluate a checkpoint on a container");
    cmd_eval->add_option("--checkpoint", ev.checkpoint, "checkpoint .bin")->required();
    cmd_eval->add_option("--data", ev.data, "DIVE1 container")->required();
    cmd_eval->add_option("--out", ev.out, "report JSON path")->required();
    cmd_eval->add_option("--config", ev.config_path, "config to cross-check against");
    cmd_eval->add_option("--mnist-dir", ev.mnist_dir, "directory with MNIST IDX files");

    cli::AblateArgs ab;
    auto* cmd_ablate = app.add_subcommand("ablate", "train/evaluate ablation variants");
    cmd_ablate->add_option("--config", ab.config_path, "base training config JSON");
    cmd_ablate->add_option("--data", ab.data, "frozen test container")->required();
    cmd_ablate->add_option("--out-dir", ab.out_dir, "output directory");
    cmd_ablate
        ->add_option("--flags", ab.flags,
                     "ablations: no-missingness, static-appearance, soft-labels")
        ->required();
    cmd_ablate->add_option("--mnist-dir", ab.mnist_dir, "directory with MNIST IDX files");
    cmd_ablate->add_flag("--quiet", ab.quiet, "suppress progress lines");

    cli::RenderArgs rn;
    auto* cmd_render = app.add_subcommand("render", "figure-style PNG grids for samples");
    cmd_render->add_option("--checkpoint", rn.checkpoint, "checkpoint .bin")->required();
    cmd_render->add_option("--data", rn.data, "DIVE1 container")->required();
    cmd_render->add_option("--indices", rn.indices, "sample indices to render");
    cmd_render->add_option("--out-dir", rn.out_dir, "output directory");
    cmd_render->add_option("--mnist-dir", rn.mnist_dir, "directory with MNIST IDX files");

    struct FetchArgs {
        std::string host = "127.0.0.1";
        int port = 80;
        std::string dir;
        std::vector<std::string> sha256s;
    } fetch;
    auto* cmd_fetch =
        app.add_subcommand("fetch-mnist", "download the MNIST IDX files with checksums");
    cmd_fetch->add_option("--host", fetch.host, "HTTP host serving /mnist/*.gz");
    cmd_fetch->add_option("--port", fetch.port, "HTTP port");
    cmd_fetch->add_option("--dir", fetch.dir, "destination directory");
    cmd_fetch->add_option("--sha256", fetch.sha256s,
                          "expected archive checksums (4, in canonical order)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : cli::kUsageError;
    }

    try {
        if (cmd_gen->parsed()) return cli::run_generate(gen);
        if (cmd_train->parsed()) return cli::run_train(tr);
        if (cmd_eval->parsed()) return cli::run_evaluate(ev);
        if (cmd_ablate->parsed()) return cli::run_ablate(ab);
        if (cmd_render->parsed()) return cli::run_render(rn);
        if (cmd_fetch->parsed()) {
            const std::string dir = fetch.dir.empty() ? data_root() + "/mnist" : fetch.dir;
            for (const RemoteFile& file : mnist_remote_files(fetch.sha256s)) {
                if (file.sha256.empty())
                    std::cerr << "warning: no checksum pinned for " << file.filename << "\n";
                std::string err;
                if (!fetch_verified(fetch.host, fetch.port, file, dir, &err)) {
                    std::cerr << "error: " << err << "\n";
                    return cli::kDataError;
                }
                std::cerr << "fetched " << file.filename << "\n";
            }
            return cli::kOk;
        }
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return cli::kNumericalError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return cli::kUsageError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::kDataError;
    }
    return cli::kOk;
}
