// Copyright (c) 2026 DIVE contributors
// SPDX-License-Identifier: Apache-2.0
//
// Training schedules as pure functions of the iteration count.
//   - learning rate: base until 1/3 of the run, then multiplied once
//   - Eq.-2 substitution probability: constant in training, 0 at eval
//   - Eq.-7 dynamic-mixing probability: 0.7 raised to 0.85 after
//     iteration 3000; 1 at eval; 0 in the static-appearance ablation

#pragma once

#include "dive/model/missingness.hpp"

namespace dive {

struct Schedules {
    double lr_base = 1e-3;
    double lr_decay_factor = 0.4;
    double lr_decay_at_fraction = 1.0 / 3.0;
    double p_substitute_train = 0.25;
    double p_dynamic_initial = 0.7;
    double p_dynamic_raised = 0.85;
    long p_dynamic_raise_after = 3000;

    /// iter is 1-based; decay applies strictly after the cut iteration.
    double lr(long iter, long total_iters) const {
        const long cut = long(double(total_iters) * lr_decay_at_fraction);
        return iter <= cut ? lr_base : lr_base * lr_decay_factor;
    }

    double p_substitute(RunMode mode) const {
        return mode == RunMode::eval ? 0.0 : p_substitute_train;
    }

    double p_dynamic(long iter, RunMode mode, bool static_appearance) const {
        if (static_appearance) return 0.0;
        if (mode == RunMode::eval) return 1.0;
        return iter <= p_dynamic_raise_after ? p_dynamic_initial : p_dynamic_raised;
    }
};

}  // namespace dive
