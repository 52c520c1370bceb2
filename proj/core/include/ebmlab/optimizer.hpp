#pragma once

#include <cstdint>

#include "ebmlab/model.hpp"

namespace ebmlab {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.0;
    double beta2 = 0.99;
    double eps = 1e-8;
};

void validate(const AdamConfig& cfg);

struct OptimizerState {
    ParamVector first_moment;
    ParamVector second_moment;
    std::int64_t step_count = 0;

    static OptimizerState zeros(std::size_t n);
};

/// One bias-corrected Adam update minimizing the loss whose gradient is
/// `grad`. Callers maximizing an objective pass the negated gradient.
void adam_step(ParamVector& theta, const ParamVector& grad,
               OptimizerState& state, const AdamConfig& cfg);

}  // namespace ebmlab
