#include "ebmlab/numerics.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "ebmlab/error.hpp"

namespace ebmlab {

double logsumexp(std::span<const double> v) {
    if (v.empty()) return -std::numeric_limits<double>::infinity();
    const double m = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

double squared_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

double norm(std::span<const double> v) { return std::sqrt(squared_norm(v)); }

double gamma_p(double a, double x) {
    if (a <= 0.0) throw ConfigError("gamma_p: a must be positive");
    if (x < 0.0) throw ConfigError("gamma_p: x must be non-negative");
    if (x == 0.0) return 0.0;

    const double log_prefactor = -x + a * std::log(x) - std::lgamma(a);
    if (x < a + 1.0) {
        // series expansion of P(a, x)
        double term = 1.0 / a;
        double sum = term;
        double ap = a;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if (std::abs(term) < std::abs(sum) * 1e-16) break;
        }
        return sum * std::exp(log_prefactor);
    }
    // Lentz continued fraction for Q(a, x)
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return 1.0 - std::exp(log_prefactor) * h;
}

double chi2_quantile(double p, double dof) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("chi2_quantile: p must be in (0,1)");
    if (dof <= 0.0) throw ConfigError("chi2_quantile: dof must be positive");

    // bracket then bisect on the CDF P(dof/2, x/2)
    double hi = dof + 10.0;
    while (gamma_p(dof / 2.0, hi / 2.0) < p) hi *= 2.0;
    double lo = 0.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (gamma_p(dof / 2.0, mid / 2.0) < p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    if (n == 0) return {};
    if (n == 1) return {lo};
    std::vector<double> out(n);
    const double step = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = lo + step * static_cast<double>(i);
    }
    out.back() = hi;
    return out;
}

std::vector<double> finite_diff_gradient(
    const std::function<double(std::span<const double>)>& fn,
    std::span<const double> point, double h) {
    if (!(h > 0.0)) throw ConfigError("finite_diff_gradient: h must be positive");
    std::vector<double> p(point.begin(), point.end());
    std::vector<double> grad(p.size(), 0.0);
    for (std::size_t j = 0; j < p.size(); ++j) {
        const double saved = p[j];
        p[j] = saved + h;
        const double fp = fn(p);
        p[j] = saved - h;
        const double fm = fn(p);
        p[j] = saved;
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            throw NonFiniteError("finite_diff_gradient: fn returned a non-finite value at coordinate " +
                                 std::to_string(j));
        }
        grad[j] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

}  // namespace ebmlab
