// Copyright (c) 2026 DIVE contributors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite. Runs every release criterion end to end at its pinned
// threshold and prints one PASS/FAIL line per criterion. Exit status is
// the number of failed criteria. Artifacts (checkpoints, loss curves,
// reports, the frozen test set) are left under --out-dir for inspection.
//
//   1 property suite: transformer, gradients, KL oracle, selection
//     semantics, gating, schedules                     (< 5 min, CPU)
//   2 metric-oracle equivalence (1e-6)
//   3 desk-scale training sanity: smoothed NELBO -30%  (3 seeds, all)
//   4 ablation direction: rec MSE, with < without      (3 pairs, majority)
//   5 missingness detection: balanced accuracy > 0.7   (median of 3)
//   6 Table-1 report schema (absolute values are explicitly NOT
//     reproduced at desk scale)
//   7 determinism: data generation, evaluation, checkpoint resume

#include <chrono>
#include <iostream>

#include "dive/cli.hpp"
#include "dive/eval/ablation.hpp"
#include "dive/eval/harness.hpp"
#include "dive/train/trainer.hpp"

using namespace dive;

namespace {

struct Criterion {
    int id;
    std::string name;
    bool pass = false;
    std::string detail;
};

std::vector<Criterion> g_results;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    g_results.push_back({id, name, pass, detail});
    std::cout << "criterion " << id << " [" << (pass ? "PASS" : "FAIL") << "] " << name
              << " - " << detail << "\n"
              << std::flush;
}

double now_s() {
    using clk = std::chrono::steady_clock;
    static const clk::time_point t0 = clk::now();
    return std::chrono::duration<double>(clk::now() - t0).count();
}

void progress(const std::string& msg) {
    std::cerr << "[" << int(now_s()) << "s] " << msg << "\n" << std::flush;
}

// ---------------------------------------------------------------- criterion 1

bool check_transformer_properties(std::string& why) {
    const int G = 28, F = 64;
    // band-limited glimpse
    TensorT<double> glimpse(1, G * G);
    for (int i = 0; i < G; ++i)
        for (int j = 0; j < G; ++j)
            glimpse.v[i * G + j] =
                0.9 * std::exp(-((i - 15.0) * (i - 15.0) + (j - 13.0) * (j - 13.0)) / 32.0);

    {  // identity
        GraphT<double> g;
        TensorT<double> idp(1, 3);
        idp.v = {0, 0, 1.0};
        Ref out = st_place(g, g.input(glimpse), g.input(idp), G, G);
        for (int i = 0; i < G * G; ++i)
            if (std::abs(g.val(out).v[i] - glimpse.v[i]) > 1e-12) {
                why = "identity placement mismatch";
                return false;
            }
    }
    {  // linearity + zero padding
        GraphT<double> g;
        TensorT<double> pose(1, 3);
        pose.v = {0.3, -0.2, 0.5};
        Rng rng(3);
        TensorT<double> g2(1, G * G);
        for (auto& v : g2.v) v = rng.uniform();
        TensorT<double> mix(1, G * G);
        for (int i = 0; i < G * G; ++i) mix.v[i] = 0.6 * glimpse.v[i] - 1.4 * g2.v[i];
        Ref o1 = st_place(g, g.input(glimpse), g.input(pose), G, F);
        Ref o2 = st_place(g, g.input(g2), g.input(pose), G, F);
        Ref om = st_place(g, g.input(mix), g.input(pose), G, F);
        for (int i = 0; i < F * F; ++i)
            if (std::abs(g.val(om).v[i] - (0.6 * g.val(o1).v[i] - 1.4 * g.val(o2).v[i])) >
                1e-12) {
                why = "placement is not linear in pixels";
                return false;
            }
        // zero padding: sampling fully outside yields exact zeros
        TensorT<double> ones(1, F * F);
        ones.fill(1.0);
        TensorT<double> edge(1, 3);
        edge.v = {-1.0, 0.0, 0.5};
        Ref ext = st_extract(g, g.input(ones), g.input(edge), F, G);
        for (int gi = 0; gi < G; ++gi)
            if (g.val(ext)(0, gi * G) != 0.0) {
                why = "out-of-bounds sampling did not read zero";
                return false;
            }
    }
    {  // round trip < 0.05
        GraphT<double> g;
        TensorT<double> pose(1, 3);
        pose.v = {0.21, -0.13, 0.45};
        Ref placed = st_place(g, g.input(glimpse), g.input(pose), G, F);
        Ref back = st_extract(g, placed, g.input(pose), F, G);
        double worst = 0;
        for (int i = 0; i < G * G; ++i)
            worst = std::max(worst, std::abs(g.val(back).v[i] - glimpse.v[i]));
        if (worst >= 0.05) {
            why = "round-trip error " + std::to_string(worst);
            return false;
        }
    }
    {  // pose gradient vs central differences, step 1e-4, rel err < 1e-3
        TensorT<double> frame(1, F * F);
        for (int i = 0; i < F; ++i)
            for (int j = 0; j < F; ++j)
                frame.v[i * F + j] =
                    std::exp(-((i - 30.0) * (i - 30.0) + (j - 24.0) * (j - 24.0)) / 72.0) +
                    0.6 * std::exp(-((i - 18.0) * (i - 18.0) + (j - 45.0) * (j - 45.0)) / 50.0);
        ParamStore<double> ps;
        auto& pose = ps.add("pose", 1, 3);
        pose.value.v = {0.1, -0.2, 0.5};
        auto forward = [&]() {
            GraphT<double> g;
            Ref out = st_extract(g, g.input(frame), g.param(pose), F, G);
            return g.val(sum_all(g, out)).v[0];
        };
        ps.zero_grads();
        {
            GraphT<double> g;
            Ref out = st_extract(g, g.input(frame), g.param(pose), F, G);
            g.backward(sum_all(g, out));
        }
        for (int d = 0; d < 3; ++d) {
            const double saved = pose.value.v[d], h = 1e-4;
            pose.value.v[d] = saved + h;
            const double fp = forward();
            pose.value.v[d] = saved - h;
            const double fm = forward();
            pose.value.v[d] = saved;
            const double num = (fp - fm) / (2 * h);
            const double rel = std::abs(num - pose.grad.v[d]) /
                               std::max({std::abs(num), std::abs(pose.grad.v[d]), 1e-8});
            if (rel >= 1e-3) {
                why = "transformer pose gradient rel err " + std::to_string(rel);
                return false;
            }
        }
    }
    return true;
}

ModelConfig acceptance_tiny_model() {
    ModelConfig c;
    c.frame_size = 32;
    c.glimpse_size = 12;
    c.seq_len = 6;
    c.input_len = 3;
    c.enc_conv1 = 4;
    c.enc_conv2 = 6;
    c.enc_conv3 = 8;
    c.enc_embed = 24;
    c.enc_hidden = 16;
    c.pose_hidden = 12;
    c.app_glimpse_embed = 20;
    c.app_hidden = 18;
    c.app_static = 24;
    c.app_dynamic = 8;
    c.z_appearance = 16;
    c.dec_ch0 = 6;
    c.dec_ch1 = 4;
    return c;
}

template <typename S>
BatchT<S> random_batch(const ModelConfig& c, int B, std::uint64_t seed) {
    BatchT<S> b;
    b.batch = B;
    Rng rng(seed);
    const int F = c.frame_size, K = c.input_len, T = c.seq_len;
    b.frames_in.resize(K * B, F * F);
    for (auto& v : b.frames_in.v) v = S(rng.bernoulli(0.2) ? rng.uniform(0.3, 1.0) : 0.0);
    b.recon_target.assign(K, TensorT<S>(B, F * F));
    for (int t = 0; t < K; ++t)
        for (int bb = 0; bb < B; ++bb)
            for (int p = 0; p < F * F; ++p)
                b.recon_target[t](bb, p) = b.frames_in(t * B + bb, p);
    b.pred_target.assign(T - K, TensorT<S>(B, F * F));
    for (auto& frame : b.pred_target)
        for (auto& v : frame.v) v = S(rng.bernoulli(0.2) ? rng.uniform(0.3, 1.0) : 0.0);
    return b;
}

bool check_model_gradients(std::string& why) {
    // f_tran and the Eq.-3 style imputation map, then the full ELBO
    ModelConfig mc = acceptance_tiny_model();
    DiveModelT<double> model(mc);

    {  // f_tran beta gradient, rel err < 1e-3
        ParamStore<double> ps;
        auto& beta = ps.add("beta", 2, 3);
        Rng rng(61);
        for (auto& v : beta.value.v) v = rng.uniform(-0.5, 0.5);
        TensorT<double> raw_prev(2, 3);
        for (auto& v : raw_prev.v) v = rng.uniform(-0.5, 0.5);
        auto forward = [&]() {
            GraphT<double> g;
            Ref raw = add(g, g.input(raw_prev),
                          model.pose.f_tran(g, concat_cols(g, g.input(raw_prev),
                                                           g.param(beta))));
            Ref pose = model.pose.squash(g, raw);
            return g.val(sum_all(g, mul(g, pose, pose))).v[0];
        };
        ps.zero_grads();
        {
            GraphT<double> g;
            Ref raw = add(g, g.input(raw_prev),
                          model.pose.f_tran(g, concat_cols(g, g.input(raw_prev),
                                                           g.param(beta))));
            Ref pose = model.pose.squash(g, raw);
            g.backward(sum_all(g, mul(g, pose, pose)));
        }
        for (std::size_t i = 0; i < beta.value.size(); ++i) {
            const double saved = beta.value.v[i], h = 1e-5;
            beta.value.v[i] = saved + h;
            const double fp = forward();
            beta.value.v[i] = saved - h;
            const double fm = forward();
            beta.value.v[i] = saved;
            const double num = (fp - fm) / (2 * h);
            const double rel = std::abs(num - beta.grad.v[i]) /
                               std::max({std::abs(num), std::abs(beta.grad.v[i]), 1e-8});
            if (rel >= 1e-3) {
                why = "f_tran gradient rel err " + std::to_string(rel);
                return false;
            }
        }
    }
    {  // imputation map Jacobian
        ParamStore<double> ps;
        auto& hp = ps.add("hp", 2, mc.pose_hidden);
        Rng rng(62);
        for (auto& v : hp.value.v) v = rng.uniform(-1, 1);
        auto forward = [&]() {
            GraphT<double> g;
            Ref out = model.missingness.predict_imputed(g, g.param(hp));
            return g.val(sum_all(g, mul(g, out, out))).v[0];
        };
        ps.zero_grads();
        {
            GraphT<double> g;
            Ref out = model.missingness.predict_imputed(g, g.param(hp));
            g.backward(sum_all(g, mul(g, out, out)));
        }
        for (std::size_t i = 0; i < hp.value.size(); i += 2) {
            const double saved = hp.value.v[i], h = 1e-6;
            hp.value.v[i] = saved + h;
            const double fp = forward();
            hp.value.v[i] = saved - h;
            const double fm = forward();
            hp.value.v[i] = saved;
            const double num = (fp - fm) / (2 * h);
            const double rel = std::abs(num - hp.grad.v[i]) /
                               std::max({std::abs(num), std::abs(hp.grad.v[i]), 1e-8});
            if (rel >= 1e-3) {
                why = "imputation-map gradient rel err " + std::to_string(rel);
                return false;
            }
        }
    }
    {  // ELBO parameter subset (32 entries), frozen stochastic terms
        auto batch = random_batch<double>(mc, 2, 7);
        Rng rng(11);
        RngNoise<double> base(rng);
        FrozenNoise<double> frozen(base);
        SampleParams sp;
        auto forward = [&]() {
            frozen.rewind();
            GraphT<double> g;
            auto fwd = model.forward(g, batch, sp, frozen);
            return double(g.val(fwd.loss).v[0]);
        };
        model.params().zero_grads();
        {
            GraphT<double> g;
            auto fwd = model.forward(g, batch, sp, frozen);
            g.backward(fwd.loss);
        }
        auto params = model.params().all();
        Rng pick(23);
        int checked = 0;
        while (checked < 32) {
            ParamT<double>* p = params[pick.uniform_int(0, int(params.size()) - 1)];
            const std::size_t idx =
                std::size_t(pick.uniform_int(0, int(p->value.size()) - 1));
            const double saved = p->value.v[idx], h = 1e-5;
            p->value.v[idx] = saved + h;
            const double fp = forward();
            p->value.v[idx] = saved - h;
            const double fm = forward();
            p->value.v[idx] = saved;
            const double num = (fp - fm) / (2 * h);
            const double ana = p->grad.v[idx];
            ++checked;
            if (std::abs(num) < 1e-9 && std::abs(ana) < 1e-9) continue;
            const double rel =
                std::abs(num - ana) / std::max({std::abs(num), std::abs(ana), 1e-7});
            if (rel >= 1e-2) {
                why = "ELBO gradient rel err " + std::to_string(rel) + " at " + p->name;
                return false;
            }
        }
    }
    return true;
}

bool check_kl_and_semantics(std::string& why) {
    {  // Gaussian KL closed form vs Monte-Carlo
        const double mu = 1.0, sigma = 1.0;
        const double closed = 0.5 * (mu * mu + sigma * sigma - 1.0 - 2.0 * std::log(sigma));
        if (std::abs(closed - 0.5) > 1e-12) {
            why = "closed-form KL(N(1,1)||N(0,1)) != 0.5";
            return false;
        }
        Rng rng(17);
        const int n = 100000;
        double acc = 0, acc2 = 0;
        for (int i = 0; i < n; ++i) {
            const double x = mu + sigma * rng.normal();
            const double v = -0.5 * (x - mu) * (x - mu) / (sigma * sigma) -
                             std::log(sigma) + 0.5 * x * x;
            acc += v;
            acc2 += v * v;
        }
        const double mc = acc / n;
        const double se = std::sqrt((acc2 / n - mc * mc) / n);
        if (std::abs(closed - mc) >= 3 * se) {
            why = "KL Monte-Carlo oracle disagrees: closed " + std::to_string(closed) +
                  " mc " + std::to_string(mc);
            return false;
        }
    }
    {  // Eq.-2 selection semantics
        GraphT<float> g;
        Rng rng(21);
        TensorT<float> h(4, 8), hh(4, 8);
        for (auto& v : h.v) v = float(rng.uniform());
        for (auto& v : hh.v) v = float(rng.uniform());
        Ref hr = g.input(h), hhr = g.input(hh);
        Ref u1 = MissingnessModelT<float>::impute_select(g, {1, 1, 1, 1}, {0, 1, 0, 1}, hr,
                                                         hhr);
        if (g.val(u1).v != hh.v) {
            why = "z_m=1 did not select h_hat";
            return false;
        }
        Ref u2 = MissingnessModelT<float>::impute_select(g, {0, 0, 0, 0}, {0, 0, 0, 0}, hr,
                                                         hhr);
        if (g.val(u2).v != h.v) {
            why = "eval-mode u != h for z_m=0";
            return false;
        }
        Ref u3 = MissingnessModelT<float>::impute_select(g, {0, 1, 0, 0}, {1, 0, 0, 1}, hr,
                                                         hhr);
        const auto& v3 = g.val(u3);
        for (int col = 0; col < 8; ++col) {
            const bool ok = v3(0, col) == hh(0, col) && v3(1, col) == hh(1, col) &&
                            v3(2, col) == h(2, col) && v3(3, col) == hh(3, col);
            if (!ok) {
                why = "mixed-row selection blended candidates";
                return false;
            }
        }
    }
    {  // Eq.-9 hard-gate zero leakage
        ModelConfig mc = acceptance_tiny_model();
        DiveModelT<float> model(mc);
        GraphT<float> g;
        Rng rng(31);
        TensorT<float> z(2, mc.z_appearance);
        for (auto& v : z.v) v = float(rng.uniform(-2, 2));
        TensorT<float> pose(2, 3);
        pose.v = {0.1f, 0.2f, 0.5f, -0.3f, 0.f, 0.4f};
        Ref dec = model.generator.decode_glimpse(g, g.input(z));
        Ref placed = model.generator.place_object(g, dec, g.input(pose));
        Ref gated = FrameGeneratorT<float>::gate_contribution(g, placed, RunMode::eval,
                                                              {1, 0}, Ref{});
        for (int p = 0; p < g.val(gated).cols; ++p)
            if (g.val(gated)(0, p) != 0.f) {
                why = "hard gate leaked a missing object";
                return false;
            }
    }
    {  // Bernoulli schedules
        Schedules s;
        const bool ok = s.p_substitute(RunMode::train) == 0.25 &&
                        s.p_substitute(RunMode::eval) == 0.0 &&
                        s.p_dynamic(3000, RunMode::train, false) == 0.7 &&
                        s.p_dynamic(3001, RunMode::train, false) == 0.85 &&
                        s.p_dynamic(1, RunMode::eval, false) == 1.0 &&
                        s.p_dynamic(1, RunMode::train, true) == 0.0;
        if (!ok) {
            why = "Bernoulli schedule values off";
            return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------- criterion 2

double oracle_bce(const std::vector<float>& p, const std::vector<float>& t) {
    double acc = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double pi = std::min(std::max(double(p[i]), 1e-6), 1.0 - 1e-6);
        acc -= double(t[i]) * std::log(pi) + (1.0 - double(t[i])) * std::log(1.0 - pi);
    }
    return acc;
}

double oracle_mse(const std::vector<float>& p, const std::vector<float>& t) {
    double acc = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double e = double(p[i]) - double(t[i]);
        acc += e * e;
    }
    return acc;
}

double oracle_ssim(const std::vector<float>& a, const std::vector<float>& b, int w, int h) {
    const int win = 11, r = win / 2;
    const double sigma = 1.5, C1 = 1e-4, C2 = 9e-4;
    double kernel[11][11], ksum = 0;
    for (int i = 0; i < win; ++i)
        for (int j = 0; j < win; ++j) {
            const double dy = i - 5.0, dx = j - 5.0;
            kernel[i][j] = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
            ksum += kernel[i][j];
        }
    for (auto& row : kernel)
        for (auto& v : row) v /= ksum;
    double acc = 0;
    long count = 0;
    for (int cy = r; cy < h - r; ++cy)
        for (int cx = r; cx < w - r; ++cx) {
            double ma = 0, mb = 0, maa = 0, mbb = 0, mab = 0;
            for (int i = 0; i < win; ++i)
                for (int j = 0; j < win; ++j) {
                    const double va = a[(cy - r + i) * w + (cx - r + j)];
                    const double vb = b[(cy - r + i) * w + (cx - r + j)];
                    ma += kernel[i][j] * va;
                    mb += kernel[i][j] * vb;
                    maa += kernel[i][j] * va * va;
                    mbb += kernel[i][j] * vb * vb;
                    mab += kernel[i][j] * va * vb;
                }
            const double num = (2 * ma * mb + C1) * (2 * (mab - ma * mb) + C2);
            const double den = (ma * ma + mb * mb + C1) *
                               ((maa - ma * ma) + (mbb - mb * mb) + C2);
            acc += num / den;
            ++count;
        }
    return acc / count;
}

bool check_metric_oracles(std::string& why) {
    Rng rng(101);
    for (int trial = 0; trial < 200; ++trial) {
        const int side = (trial % 2 == 0) ? 8 : 16;
        std::vector<float> p(side * side), t(side * side);
        for (auto& v : p) v = float(rng.uniform());
        for (auto& v : t)
            v = (trial % 3 == 0) ? float(rng.bernoulli(0.3)) : float(rng.uniform());
        const auto band = metrics::RowBand::full(side);
        if (std::abs(metrics::bce_frame(p.data(), t.data(), side, band) - oracle_bce(p, t)) >=
            1e-6) {
            why = "BCE oracle mismatch";
            return false;
        }
        if (std::abs(metrics::mse_frame(p.data(), t.data(), side, band) - oracle_mse(p, t)) >=
            1e-6) {
            why = "MSE oracle mismatch";
            return false;
        }
        if (side >= 16 &&
            std::abs(metrics::ssim_frame(p.data(), t.data(), side, side, band) -
                     oracle_ssim(p, t, side, side)) >= 1e-6) {
            why = "SSIM oracle mismatch";
            return false;
        }
    }
    // closed form: constant 0.5 against any binary 64x64 frame
    std::vector<float> half(64 * 64, 0.5f), target(64 * 64);
    for (auto& v : target) v = float(rng.bernoulli(0.4));
    const double got =
        metrics::bce_frame(half.data(), target.data(), 64, metrics::RowBand::full(64));
    if (std::abs(got - 4096 * std::log(2.0)) > 1e-8) {
        why = "constant-0.5 closed form off: " + std::to_string(got);
        return false;
    }
    return true;
}

// ------------------------------------------------------- criteria 3/4/5 setup

TrainConfig desk_config(std::uint64_t seed, bool with_missingness) {
    TrainConfig c;
    c.scenario = 2;
    c.glyph_source = "builtin";
    c.sequences_per_epoch = 1000;
    c.epochs = 20;
    c.batch_size = 16;
    c.grad_clip = 5.0;
    c.seed = seed;
    c.checkpoint_interval = 0;  // only the final checkpoint
    c.model.num_objects = 2;
    c.model.seq_len = 20;
    c.model.input_len = 10;
    c.model.frame_size = 64;
    // scenarios 1-2 use the static-appearance configuration
    c.model.static_appearance = true;
    c.model.no_missingness = !with_missingness;
    c.model.init_seed = seed;
    return c;
}

struct DeskRun {
    std::uint64_t seed;
    bool with_missingness;
    std::vector<IterationRecord> records;
    std::string checkpoint;
    MetricsReport report;
};

}  // namespace

int main(int argc, char** argv) {
    std::string out_dir = "acceptance_artifacts";
    for (int i = 1; i + 1 < argc; i += 2)
        if (std::string(argv[i]) == "--out-dir") out_dir = argv[i + 1];
    std::filesystem::create_directories(out_dir);

    // ---- criterion 1
    progress("criterion 1: property suite");
    {
        std::string why;
        bool ok = check_transformer_properties(why) && check_model_gradients(why) &&
                  check_kl_and_semantics(why);
        report(1, "property suite", ok, ok ? "transformer, gradients, KL, Eq.-2/Eq.-9, schedules" : why);
    }

    // ---- criterion 2
    progress("criterion 2: metric oracles");
    {
        std::string why;
        bool ok = check_metric_oracles(why);
        report(2, "metric-oracle equivalence", ok,
               ok ? "BCE/MSE/SSIM within 1e-6 of brute force on 200 images; 4096 ln 2 check"
                  : why);
    }

    // ---- frozen test set (shared by 4, 5, 7)
    progress("generating frozen scenario-2 test set (1024 sequences)");
    const std::string test_set = out_dir + "/test_scenario2.dive1";
    {
        cli::GenerateArgs gen;
        gen.scenario = 2;
        gen.count = 1024;
        gen.seed = 0;
        gen.out = test_set;
        gen.force = true;
        if (cli::run_generate(gen) != cli::kOk) {
            report(7, "determinism", false, "test-set generation failed");
            return 1;
        }
    }

    // ---- desk-scale runs (criteria 3, 4, 5)
    GlyphSet train_glyphs = builtin_glyphs("train", 64);
    GlyphSet test_glyphs = builtin_glyphs("test", 64);
    const std::vector<std::uint64_t> seeds{1, 2, 3};
    std::vector<DeskRun> with_runs, without_runs;

    for (bool with_missing : {true, false}) {
        for (std::uint64_t seed : seeds) {
            DeskRun run;
            run.seed = seed;
            run.with_missingness = with_missing;
            TrainConfig cfg = desk_config(seed, with_missing);
            const std::string run_dir = out_dir + (with_missing ? "/with_seed" : "/without_seed") +
                                        std::to_string(seed);
            progress("training " + run_dir + " (" + std::to_string(cfg.total_iterations()) +
                     " iterations)");
            Trainer trainer(cfg, train_glyphs);
            auto result = trainer.run(run_dir, [&](const IterationRecord& rec) {
                if (rec.iteration % 200 == 0)
                    progress("  " + run_dir + " iter " + std::to_string(rec.iteration) +
                             " nelbo " + std::to_string(rec.terms.nelbo()));
            });
            run.records = std::move(result.records);
            run.checkpoint = result.final_checkpoint;

            progress("evaluating " + run_dir);
            ContainerReader data(test_set);
            run.report = evaluate(trainer.model(), data, test_glyphs);
            run.report.config_hash = cfg.config_hash();
            run.report.checkpoint_sha256 = Sha256::of_file(run.checkpoint);
            run.report.dataset_sha256 = Sha256::of_file(test_set);
            {
                std::ofstream f(run_dir + "/report.json");
                f << run.report.to_json().dump(2) << "\n";
            }
            (with_missing ? with_runs : without_runs).push_back(std::move(run));
        }
    }

    // ---- criterion 3: smoothed NELBO decrease >= 30%, all 3 seeds
    {
        bool all_pass = true;
        std::string detail;
        for (const auto& run : with_runs) {
            const double at100 = smoothed_nelbo(run.records, 100);
            const double at_end = smoothed_nelbo(run.records, run.records.size());
            const double drop = (at100 - at_end) / at100;
            detail += "seed " + std::to_string(run.seed) + ": " +
                      std::to_string(int(drop * 100)) + "% ";
            if (!(drop >= 0.30)) all_pass = false;
        }
        report(3, "desk-scale training sanity (smoothed NELBO -30%, 3 seeds)", all_pass,
               detail);
    }

    // ---- criterion 4: rec MSE direction, majority of 3 seed pairs
    {
        int wins = 0;
        std::string detail;
        for (std::size_t i = 0; i < seeds.size(); ++i) {
            auto cmp = compare_ablations({{"with-missingness", with_runs[i].report},
                                          {"no-missingness", without_runs[i].report}});
            const bool win = cmp.winner_for("mse-rec") == 0;
            wins += win;
            detail += "seed " + std::to_string(seeds[i]) + ": " +
                      std::to_string(with_runs[i].report.mse_rec) + (win ? " < " : " >= ") +
                      std::to_string(without_runs[i].report.mse_rec) + "  ";
            std::ofstream f(out_dir + "/ablation_seed" + std::to_string(seeds[i]) + ".csv");
            f << cmp.to_csv();
        }
        report(4, "ablation direction (rec MSE, with < without, majority of 3)", wins >= 2,
               detail);
    }

    // ---- criterion 5: balanced accuracy > 0.7, median of 3 seeds
    {
        std::vector<double> accs;
        std::string detail;
        for (const auto& run : with_runs) {
            accs.push_back(run.report.missingness_balanced_accuracy);
            detail += "seed " + std::to_string(run.seed) + ": " +
                      std::to_string(run.report.missingness_balanced_accuracy) + "  ";
        }
        std::sort(accs.begin(), accs.end());
        const double median = accs[accs.size() / 2];
        report(5, "missingness detection (balanced accuracy median > 0.7)", median > 0.7,
               detail + "median " + std::to_string(median));
    }

    // ---- criterion 6: Table-1 schema; absolute values not reproduced
    {
        const auto j = with_runs[0].report.to_json();
        const bool schema_ok = j.contains("bce-per-frame") && j["bce-per-frame"].contains("rec") &&
                               j["bce-per-frame"].contains("pred") &&
                               j.contains("mse-per-frame") && j.contains("psnr") &&
                               j.contains("ssim") && j.contains("nelbo");
        report(6, "Table-1 report schema (absolute full-scale values intentionally not reproduced)",
               schema_ok,
               schema_ok ? "all 9 metric fields emitted; desk scale is directional only"
                         : "schema fields missing");
    }

    // ---- criterion 7: determinism
    progress("criterion 7: determinism checks");
    {
        std::string detail;
        bool ok = true;

        const std::string regen = out_dir + "/test_scenario2_regen.dive1";
        cli::GenerateArgs gen;
        gen.scenario = 2;
        gen.count = 1024;
        gen.seed = 0;
        gen.out = regen;
        gen.force = true;
        ok &= (cli::run_generate(gen) == cli::kOk);
        const bool gen_ok = Sha256::of_file(test_set) == Sha256::of_file(regen);
        ok &= gen_ok;
        detail += std::string("generate-data bit-identical: ") + (gen_ok ? "yes" : "NO");
        std::filesystem::remove(regen);

        {  // evaluate twice -> identical reports
            TrainConfig cfg = desk_config(seeds[0], true);
            DiveModel model(cfg.model);
            load_checkpoint<float>(with_runs[0].checkpoint, model.params(), nullptr);
            ContainerReader d1(test_set);
            MetricsReport r1 = evaluate(model, d1, test_glyphs);
            ContainerReader d2(test_set);
            MetricsReport r2 = evaluate(model, d2, test_glyphs);
            const bool eval_ok = r1.to_json().dump() == r2.to_json().dump();
            ok &= eval_ok;
            detail += std::string("; evaluate repeatable: ") + (eval_ok ? "yes" : "NO");
        }

        {  // checkpoint resume reproduces the next loss bit-identically
            TrainConfig cfg;
            cfg.model = acceptance_tiny_model();
            cfg.scenario = 2;
            cfg.batch_size = 4;
            cfg.sequences_per_epoch = 40;
            cfg.epochs = 4;
            cfg.checkpoint_interval = 0;
            cfg.data.removal_t_min = cfg.data.removal_t_max = 2;
            cfg.seed = 9;
            GlyphSet glyphs = builtin_glyphs("train", 4);
            Trainer a(cfg, glyphs);
            for (int i = 0; i < 5; ++i) a.step();
            const std::string ckpt = a.save(out_dir + "/resume_check");
            const double next_a = a.step().terms.nelbo();
            Trainer b(cfg, glyphs);
            b.load(ckpt);
            const double next_b = b.step().terms.nelbo();
            const bool resume_ok = next_a == next_b;
            ok &= resume_ok;
            detail += std::string("; resume loss bit-identical: ") + (resume_ok ? "yes" : "NO");
        }
        report(7, "determinism (generate-data, evaluate, checkpoint resume)", ok, detail);
    }

    int failures = 0;
    std::cout << "\n==== acceptance summary ====\n";
    for (const auto& c : g_results) {
        std::cout << "criterion " << c.id << ": " << (c.pass ? "PASS" : "FAIL") << "\n";
        failures += c.pass ? 0 : 1;
    }
    std::cout << (failures == 0 ? "ALL CRITERIA PASSED" : "FAILURES PRESENT") << "\n";
    return failures;
}
