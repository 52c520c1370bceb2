#include "ebmlab/objectives.hpp"

#include <cmath>
#include <vector>

#include "ebmlab/error.hpp"
#include "ebmlab/numerics.hpp"

namespace ebmlab {

namespace {

void check_pair(const EnergyModel& model, const Batch& real, const Batch& fake,
                const char* op) {
    if (real.size() == 0 || fake.size() == 0) {
        throw DimensionError(std::string(op) + ": batches must be non-empty");
    }
    if (real.dim() != model.input_dim() || fake.dim() != model.input_dim()) {
        throw DimensionError(std::string(op) + ": batch width does not match input_dim");
    }
}

}  // namespace

LossReport at_loss(const EnergyModel& model, const Batch& real, const Batch& fake) {
    check_pair(model, real, fake, "at_loss");
    const Tensor f_real = energy_forward(model, real.points);
    const Tensor f_fake = energy_forward(model, fake.points);
    const double inv_nr = 1.0 / static_cast<double>(real.size());
    const double inv_nf = 1.0 / static_cast<double>(fake.size());

    LossReport report;
    double mean_sig_real = 0.0, mean_sig_fake = 0.0;
    // Reverse mode through the loss expression itself: the derivative of
    // -softplus(-t) is sigmoid(-t), of -softplus(t) is -sigmoid(t).
    std::vector<double> w_real(real.size()), w_fake(fake.size());
    for (std::size_t i = 0; i < real.size(); ++i) {
        const double t = f_real.values()[i];
        report.real_term += log_sigmoid(t) * inv_nr;
        w_real[i] = sigmoid(-t) * inv_nr;
        mean_sig_real += sigmoid(t) * inv_nr;
    }
    for (std::size_t i = 0; i < fake.size(); ++i) {
        const double t = f_fake.values()[i];
        report.fake_term += log_one_minus_sigmoid(t) * inv_nf;
        w_fake[i] = -sigmoid(t) * inv_nf;
        mean_sig_fake += sigmoid(t) * inv_nf;
    }
    report.value = report.real_term + report.fake_term;
    report.grad = grad_params(model, real.points, w_real);
    report.grad += grad_params(model, fake.points, w_fake);
    report.aux["mean_sigmoid_real"] = mean_sig_real;
    report.aux["mean_sigmoid_fake"] = mean_sig_fake;
    return report;
}

ParamVector at_grad_closed(const EnergyModel& model, const Batch& real,
                           const Batch& fake) {
    check_pair(model, real, fake, "at_grad_closed");
    const Tensor f_real = energy_forward(model, real.points);
    const Tensor f_fake = energy_forward(model, fake.points);
    const double inv_nr = 1.0 / static_cast<double>(real.size());
    const double inv_nf = 1.0 / static_cast<double>(fake.size());

    std::vector<double> w_real(real.size()), w_fake(fake.size());
    for (std::size_t i = 0; i < real.size(); ++i) {
        w_real[i] = (1.0 - sigmoid(f_real.values()[i])) * inv_nr;
    }
    for (std::size_t i = 0; i < fake.size(); ++i) {
        w_fake[i] = -sigmoid(f_fake.values()[i]) * inv_nf;
    }
    ParamVector grad = grad_params(model, real.points, w_real);
    grad += grad_params(model, fake.points, w_fake);
    return grad;
}

LossReport ebm_mle_grad(const EnergyModel& model, const Batch& real,
                        const Batch& fake) {
    check_pair(model, real, fake, "ebm_mle_grad");
    const Tensor f_real = energy_forward(model, real.points);
    const Tensor f_fake = energy_forward(model, fake.points);
    const double inv_nr = 1.0 / static_cast<double>(real.size());
    const double inv_nf = 1.0 / static_cast<double>(fake.size());

    LossReport report;
    for (double v : f_real.values()) report.real_term += v * inv_nr;
    for (double v : f_fake.values()) report.fake_term -= v * inv_nf;
    report.value = report.real_term + report.fake_term;
    report.aux["gap"] = report.value;

    const std::vector<double> w_real(real.size(), inv_nr);
    const std::vector<double> w_fake(fake.size(), -inv_nf);
    report.grad = grad_params(model, real.points, w_real);
    report.grad += grad_params(model, fake.points, w_fake);
    return report;
}

LossReport at_training_report(const EnergyModel& model, const Batch& real,
                              const Batch& fake) {
    check_pair(model, real, fake, "at_training_report");
    const Tensor f_real = energy_forward(model, real.points);
    const Tensor f_fake = energy_forward(model, fake.points);
    const double inv_nr = 1.0 / static_cast<double>(real.size());
    const double inv_nf = 1.0 / static_cast<double>(fake.size());

    LossReport report;
    double gap = 0.0, mean_sig_real = 0.0, mean_sig_fake = 0.0;
    std::vector<double> w_real(real.size()), w_fake(fake.size());
    for (std::size_t i = 0; i < real.size(); ++i) {
        const double t = f_real.values()[i];
        report.real_term += log_sigmoid(t) * inv_nr;
        const double s = sigmoid(t);
        w_real[i] = (1.0 - s) * inv_nr;
        mean_sig_real += s * inv_nr;
        gap += t * inv_nr;
    }
    for (std::size_t i = 0; i < fake.size(); ++i) {
        const double t = f_fake.values()[i];
        report.fake_term += log_one_minus_sigmoid(t) * inv_nf;
        const double s = sigmoid(t);
        w_fake[i] = -s * inv_nf;
        mean_sig_fake += s * inv_nf;
        gap -= t * inv_nf;
    }
    report.value = report.real_term + report.fake_term;
    report.grad = grad_params(model, real.points, w_real);
    report.grad += grad_params(model, fake.points, w_fake);
    report.aux["gap"] = gap;
    report.aux["mean_sigmoid_real"] = mean_sig_real;
    report.aux["mean_sigmoid_fake"] = mean_sig_fake;
    return report;
}

R1Result r1_term(const EnergyModel& model, const Batch& real, double gamma) {
    if (gamma < 0.0) throw ConfigError("r1_term: gamma must be non-negative");
    R1Result result;
    if (gamma == 0.0) {
        result.grad = ParamVector::zeros(model.param_count());
        return result;
    }
    const InputGradNormResult base = grad_params_of_input_grad_norm(model, real.points);
    result.penalty = 0.5 * gamma * base.value;
    result.grad = base.grad;
    result.grad *= 0.5 * gamma;
    return result;
}

}  // namespace ebmlab
