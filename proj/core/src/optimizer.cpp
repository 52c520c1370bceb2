#include "ebmlab/optimizer.hpp"

#include <cmath>

#include "ebmlab/error.hpp"

namespace ebmlab {

void validate(const AdamConfig& cfg) {
    if (!(cfg.learning_rate > 0.0)) throw ConfigError("AdamConfig: learning_rate must be positive");
    if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0)) throw ConfigError("AdamConfig: beta1 must be in [0,1)");
    if (!(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) throw ConfigError("AdamConfig: beta2 must be in [0,1)");
    if (!(cfg.eps > 0.0)) throw ConfigError("AdamConfig: eps must be positive");
}

OptimizerState OptimizerState::zeros(std::size_t n) {
    OptimizerState s;
    s.first_moment = ParamVector::zeros(n);
    s.second_moment = ParamVector::zeros(n);
    return s;
}

void adam_step(ParamVector& theta, const ParamVector& grad,
               OptimizerState& state, const AdamConfig& cfg) {
    validate(cfg);
    const std::size_t n = theta.size();
    if (grad.size() != n || state.first_moment.size() != n ||
        state.second_moment.size() != n) {
        throw DimensionError("adam_step: length mismatch");
    }
    state.step_count += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step_count));
    for (std::size_t i = 0; i < n; ++i) {
        const double g = grad[i];
        double& m = state.first_moment[i];
        double& v = state.second_moment[i];
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
        const double m_hat = m / bc1;
        const double v_hat = v / bc2;
        theta[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
}

}  // namespace ebmlab
