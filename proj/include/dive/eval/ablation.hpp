// Copyright (c) 2026 DIVE contributors
// SPDX-License-Identifier: Apache-2.0
//
// Side-by-side comparison of evaluation reports from ablation runs:
// per-metric winners over the 8 quality cells ({BCE,MSE,PSNR,SSIM} x
// {rec,pred}) plus NELBO. Refuses to compare reports produced on
// different data configurations.

#pragma once

#include <iomanip>
#include <sstream>

#include "dive/eval/harness.hpp"

namespace dive {

struct AblationEntry {
    std::string name;
    MetricsReport report;
};

struct MetricCell {
    std::string metric;  // e.g. "bce-rec"
    bool higher_is_better = false;
    double value(const MetricsReport& r) const {
        if (metric == "bce-rec") return r.bce_rec;
        if (metric == "bce-pred") return r.bce_pred;
        if (metric == "mse-rec") return r.mse_rec;
        if (metric == "mse-pred") return r.mse_pred;
        if (metric == "psnr-rec") return r.psnr_rec;
        if (metric == "psnr-pred") return r.psnr_pred;
        if (metric == "ssim-rec") return r.ssim_rec;
        if (metric == "ssim-pred") return r.ssim_pred;
        if (metric == "nelbo") return r.nelbo;
        throw std::invalid_argument("unknown metric " + metric);
    }
};

inline const std::vector<MetricCell>& ablation_cells() {
    static const std::vector<MetricCell> cells = {
        {"bce-rec", false},  {"bce-pred", false}, {"mse-rec", false},
        {"mse-pred", false}, {"psnr-rec", true},  {"psnr-pred", true},
        {"ssim-rec", true},  {"ssim-pred", true}, {"nelbo", false},
    };
    return cells;
}

struct AblationComparison {
    std::vector<AblationEntry> entries;
    // winners[m] = index into entries, or -1 on an exact tie
    std::vector<int> winners;

    int winner_for(const std::string& metric) const {
        const auto& cells = ablation_cells();
        for (std::size_t m = 0; m < cells.size(); ++m)
            if (cells[m].metric == metric) return winners[m];
        throw std::invalid_argument("unknown metric " + metric);
    }

    std::string to_csv() const {
        std::ostringstream out;
        out << "metric";
        for (const auto& e : entries) out << ',' << e.name;
        out << ",winner\n";
        const auto& cells = ablation_cells();
        for (std::size_t m = 0; m < cells.size(); ++m) {
            out << cells[m].metric;
            for (const auto& e : entries) out << ',' << cells[m].value(e.report);
            out << ',' << (winners[m] >= 0 ? entries[winners[m]].name : "tie") << '\n';
        }
        return out.str();
    }

    std::string to_text() const {
        std::ostringstream out;
        out << std::left << std::setw(12) << "metric";
        for (const auto& e : entries) out << std::right << std::setw(16) << e.name;
        out << std::right << std::setw(20) << "winner" << '\n';
        const auto& cells = ablation_cells();
        for (std::size_t m = 0; m < cells.size(); ++m) {
            out << std::left << std::setw(12) << cells[m].metric;
            for (const auto& e : entries)
                out << std::right << std::setw(16) << std::fixed << std::setprecision(4)
                    << cells[m].value(e.report);
            out << std::right << std::setw(20)
                << (winners[m] >= 0 ? entries[winners[m]].name : "tie") << '\n';
        }
        return out.str();
    }
};

inline AblationComparison compare_ablations(std::vector<AblationEntry> entries) {
    if (entries.size() < 2)
        throw std::invalid_argument("compare_ablations needs at least two reports");
    const auto& first = entries[0].report;
    for (const auto& e : entries) {
        const auto& r = e.report;
        if (r.scenario != first.scenario || r.sample_count != first.sample_count ||
            r.dataset_seed != first.dataset_seed || r.dataset_sha256 != first.dataset_sha256)
            throw std::invalid_argument("compare_ablations: mismatched data configurations");
    }
    AblationComparison cmp;
    cmp.entries = std::move(entries);
    const auto& cells = ablation_cells();
    cmp.winners.assign(cells.size(), -1);
    for (std::size_t m = 0; m < cells.size(); ++m) {
        int best = 0;
        bool tie = false;
        for (std::size_t e = 1; e < cmp.entries.size(); ++e) {
            const double ve = cells[m].value(cmp.entries[e].report);
            const double vb = cells[m].value(cmp.entries[best].report);
            if (ve == vb) {
                tie = true;
            } else if (cells[m].higher_is_better ? ve > vb : ve < vb) {
                best = int(e);
                tie = false;
            }
        }
        cmp.winners[m] = tie ? -1 : best;
    }
    return cmp;
}

}  // namespace dive
