#pragma once

#include <map>
#include <string>

#include "ebmlab/batch.hpp"
#include "ebmlab/model.hpp"

namespace ebmlab {

/// Objective evaluation. `value` is the quantity the trainer maximizes
/// (value = real_term + fake_term); optimizers receive -grad and minimize.
/// All log-sigmoid quantities are computed through softplus identities, so
/// the terms stay finite however saturated the model gets.
struct LossReport {
    double value = 0.0;
    double real_term = 0.0;
    double fake_term = 0.0;
    ParamVector grad;
    std::map<std::string, double> aux;
};

/// Logistic objective mean log s(f(real)) + mean log(1 - s(f(fake))) with its
/// reverse-mode parameter gradient. aux reports mean_sigmoid_real and
/// mean_sigmoid_fake.
LossReport at_loss(const EnergyModel& model, const Batch& real, const Batch& fake);

/// Closed-form gradient of the same objective: mean over real of
/// (1 - s(f)) grad f minus mean over fake of s(f) grad f. Algebraically
/// identical to at_loss().grad but assembled from the sigmoid-scaled weights
/// directly, so the two routes cross-check each other.
ParamVector at_grad_closed(const EnergyModel& model, const Batch& real,
                           const Batch& fake);

/// Unscaled likelihood-style gradient: mean grad f over real minus mean
/// grad f over fake. value is the gap statistic mean f(real) - mean f(fake)
/// (also in aux["gap"]).
LossReport ebm_mle_grad(const EnergyModel& model, const Batch& real,
                        const Batch& fake);

/// at_loss's value terms paired with at_grad_closed's gradient route, sharing
/// one forward pass per batch; the trainer's per-iteration evaluation.
/// aux carries gap, mean_sigmoid_real, mean_sigmoid_fake.
LossReport at_training_report(const EnergyModel& model, const Batch& real,
                              const Batch& fake);

struct R1Result {
    double penalty = 0.0;  // (gamma/2) * mean ||df/dx||^2 over real
    ParamVector grad;
};

/// Input-gradient penalty at real samples. gamma = 0 yields exact zeros.
R1Result r1_term(const EnergyModel& model, const Batch& real, double gamma);

}  // namespace ebmlab
