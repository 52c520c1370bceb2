#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace ebmlab {

/// log(1 + exp(t)) without overflow for large |t|.
inline double softplus(double t) {
    return (t > 0.0 ? t : 0.0) + std::log1p(std::exp(-std::abs(t)));
}

/// Logistic sigmoid, evaluated on the numerically safe branch.
inline double sigmoid(double t) {
    if (t >= 0.0) {
        return 1.0 / (1.0 + std::exp(-t));
    }
    const double e = std::exp(t);
    return e / (1.0 + e);
}

/// log(sigmoid(t)) = -softplus(-t). Never evaluated as log of a sigmoid.
inline double log_sigmoid(double t) { return -softplus(-t); }

/// log(1 - sigmoid(t)) = -softplus(t).
inline double log_one_minus_sigmoid(double t) { return -softplus(t); }

double logsumexp(std::span<const double> v);

double squared_norm(std::span<const double> v);
double norm(std::span<const double> v);

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

/// Quantile of the chi-square distribution with `dof` degrees of freedom.
/// For dof = 2 this equals -2 log(1 - p).
double chi2_quantile(double p, double dof);

/// n evenly spaced values from lo to hi inclusive (n >= 2), or {lo} for n = 1.
std::vector<double> linspace(double lo, double hi, std::size_t n);

/// Central finite differences of a scalar function of a flat vector:
/// component j is (fn(p + h e_j) - fn(p - h e_j)) / (2h). This is the
/// independent oracle used by the gradient-check suite; keep it free of any
/// analytic-gradient code path.
std::vector<double> finite_diff_gradient(
    const std::function<double(std::span<const double>)>& fn,
    std::span<const double> point, double h);

}  // namespace ebmlab
