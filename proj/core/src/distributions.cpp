#include "ebmlab/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "ebmlab/error.hpp"
#include "ebmlab/numerics.hpp"

namespace ebmlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_box(const BoxSpec& box, const char* what) {
    if (box.lo.empty() || box.lo.size() != box.hi.size()) {
        throw ConfigError(std::string(what) + ": box lo/hi must be non-empty and equal length");
    }
    for (std::size_t i = 0; i < box.lo.size(); ++i) {
        if (!(box.lo[i] < box.hi[i])) {
            throw ConfigError(std::string(what) + ": box requires lo < hi componentwise");
        }
    }
}

void check_gaussian(const GaussianSpec& g, std::size_t dim) {
    if (g.mean.size() != dim) throw ConfigError("gaussian: mean dimension mismatch");
    if (g.cov.rank() != 2 || g.cov.rows() != dim || g.cov.cols() != dim) {
        throw ConfigError("gaussian: covariance must be [d x d]");
    }
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (std::abs(g.cov.at(i, j) - g.cov.at(j, i)) > 1e-12) {
                throw ConfigError("gaussian: covariance must be symmetric");
            }
        }
    }
    cholesky(g.cov);  // throws if not positive definite
}

double ring_inner(const RingSpec& r) { return r.radius - 0.5 * r.thickness; }
double ring_outer(const RingSpec& r) { return r.radius + 0.5 * r.thickness; }

double gaussian_log_density(const GaussianSpec& g, std::span<const double> x) {
    const std::size_t d = g.mean.size();
    const Tensor chol = cholesky(g.cov);
    // solve L y = (x - mean), then quadratic form is ||y||^2
    std::vector<double> y(d);
    double log_det = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        double s = x[i] - g.mean[i];
        for (std::size_t j = 0; j < i; ++j) s -= chol.at(i, j) * y[j];
        y[i] = s / chol.at(i, i);
        log_det += std::log(chol.at(i, i));
    }
    return -0.5 * squared_norm(y) - log_det -
           0.5 * static_cast<double>(d) * std::log(kTwoPi);
}

double gaussian_mahalanobis_sq(const GaussianSpec& g, std::span<const double> x) {
    const std::size_t d = g.mean.size();
    const Tensor chol = cholesky(g.cov);
    std::vector<double> y(d);
    for (std::size_t i = 0; i < d; ++i) {
        double s = x[i] - g.mean[i];
        for (std::size_t j = 0; j < i; ++j) s -= chol.at(i, j) * y[j];
        y[i] = s / chol.at(i, i);
    }
    return squared_norm(y);
}

void sample_gaussian(const GaussianSpec& g, RngStream& rng, std::span<double> out) {
    const std::size_t d = g.mean.size();
    const Tensor chol = cholesky(g.cov);
    std::vector<double> z(d);
    for (std::size_t i = 0; i < d; ++i) z[i] = rng.normal();
    for (std::size_t i = 0; i < d; ++i) {
        double s = g.mean[i];
        for (std::size_t j = 0; j <= i; ++j) s += chol.at(i, j) * z[j];
        out[i] = s;
    }
}

}  // namespace

double BoxSpec::volume() const {
    double v = 1.0;
    for (std::size_t i = 0; i < lo.size(); ++i) v *= hi[i] - lo[i];
    return v;
}

bool BoxSpec::contains(std::span<const double> x) const {
    if (x.size() != lo.size()) return false;
    for (std::size_t i = 0; i < lo.size(); ++i) {
        if (x[i] < lo[i] || x[i] > hi[i]) return false;
    }
    return true;
}

void BoxSpec::clamp(std::span<double> x) const {
    for (std::size_t i = 0; i < lo.size(); ++i) {
        x[i] = std::clamp(x[i], lo[i], hi[i]);
    }
}

Tensor cholesky(const Tensor& spd) {
    if (spd.rank() != 2 || spd.rows() != spd.cols()) {
        throw ConfigError("cholesky: matrix must be square");
    }
    const std::size_t n = spd.rows();
    Tensor chol({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = spd.at(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= chol.at(i, k) * chol.at(j, k);
            if (i == j) {
                if (s <= 0.0) throw ConfigError("cholesky: matrix is not positive definite");
                chol.at(i, j) = std::sqrt(s);
            } else {
                chol.at(i, j) = s / chol.at(j, j);
            }
        }
    }
    return chol;
}

DistributionSpec::DistributionSpec(Kind kind, BoxSpec domain_bounds, bool clamp_samples)
    : kind_(std::move(kind)), domain_bounds_(std::move(domain_bounds)),
      clamp_samples_(clamp_samples) {
    check_box(domain_bounds_, "DistributionSpec domain_bounds");
    const std::size_t d = domain_bounds_.dim();
    std::visit(
        [&](const auto& k) {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, GaussianSpec>) {
                check_gaussian(k, d);
            } else if constexpr (std::is_same_v<T, GaussianMixtureSpec>) {
                if (k.components.empty()) {
                    throw ConfigError("gaussian_mixture: needs at least one component");
                }
                double total = 0.0;
                for (const MixtureComponent& c : k.components) {
                    if (!(c.weight > 0.0)) {
                        throw ConfigError("gaussian_mixture: weights must be positive");
                    }
                    total += c.weight;
                    check_gaussian(c.gaussian, d);
                }
                if (std::abs(total - 1.0) > 1e-12) {
                    throw ConfigError("gaussian_mixture: weights must sum to 1");
                }
            } else if constexpr (std::is_same_v<T, RingSpec>) {
                if (k.center.size() != d) throw ConfigError("ring: center dimension mismatch");
                if (d != 2) throw ConfigError("ring: only 2D rings are supported");
                if (!(k.radius > 0.0) || !(k.thickness > 0.0) || ring_inner(k) < 0.0) {
                    throw ConfigError("ring: requires radius > thickness/2 > 0");
                }
            } else if constexpr (std::is_same_v<T, UniformBoxSpec>) {
                check_box(k.box, "uniform_box");
                if (k.box.dim() != d) throw ConfigError("uniform_box: dimension mismatch");
            } else if constexpr (std::is_same_v<T, CornerBoxSpec>) {
                check_box(k.box, "corner_box");
                if (k.box.dim() != d) throw ConfigError("corner_box: dimension mismatch");
            }
        },
        kind_);
}

const char* DistributionSpec::kind_name() const noexcept {
    switch (kind_.index()) {
        case 0: return "gaussian";
        case 1: return "gaussian_mixture";
        case 2: return "ring";
        case 3: return "uniform_box";
        case 4: return "corner_box";
    }
    return "unknown";
}

Batch sample(const DistributionSpec& spec, std::size_t n, RngStream& rng,
             SourceTag tag) {
    if (n == 0) throw ConfigError("sample: n must be at least 1");
    const std::size_t d = spec.dim();
    Tensor points({n, d});

    for (std::size_t i = 0; i < n; ++i) {
        std::span<double> out = points.row(i);
        std::visit(
            [&](const auto& k) {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, GaussianSpec>) {
                    sample_gaussian(k, rng, out);
                } else if constexpr (std::is_same_v<T, GaussianMixtureSpec>) {
                    double u = rng.uniform();
                    std::size_t pick = k.components.size() - 1;
                    for (std::size_t c = 0; c < k.components.size(); ++c) {
                        u -= k.components[c].weight;
                        if (u < 0.0) {
                            pick = c;
                            break;
                        }
                    }
                    sample_gaussian(k.components[pick].gaussian, rng, out);
                } else if constexpr (std::is_same_v<T, RingSpec>) {
                    // area-uniform radius in the annulus
                    const double r0 = ring_inner(k), r1 = ring_outer(k);
                    const double r = std::sqrt(rng.uniform(r0 * r0, r1 * r1));
                    const double a = rng.uniform(0.0, kTwoPi);
                    out[0] = k.center[0] + r * std::cos(a);
                    out[1] = k.center[1] + r * std::sin(a);
                } else if constexpr (std::is_same_v<T, UniformBoxSpec>) {
                    for (std::size_t j = 0; j < d; ++j) {
                        out[j] = rng.uniform(k.box.lo[j], k.box.hi[j]);
                    }
                } else if constexpr (std::is_same_v<T, CornerBoxSpec>) {
                    for (std::size_t j = 0; j < d; ++j) {
                        out[j] = rng.uniform(k.box.lo[j], k.box.hi[j]);
                    }
                }
            },
            spec.kind());
        if (spec.clamp_samples()) spec.domain_bounds().clamp(out);
    }
    return Batch{std::move(points), tag};
}

double log_density(const DistributionSpec& spec, std::span<const double> x) {
    if (x.size() != spec.dim()) throw DimensionError("log_density: dimension mismatch");
    const double neg_inf = -std::numeric_limits<double>::infinity();
    return std::visit(
        [&](const auto& k) -> double {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, GaussianSpec>) {
                return gaussian_log_density(k, x);
            } else if constexpr (std::is_same_v<T, GaussianMixtureSpec>) {
                std::vector<double> terms;
                terms.reserve(k.components.size());
                for (const MixtureComponent& c : k.components) {
                    terms.push_back(std::log(c.weight) + gaussian_log_density(c.gaussian, x));
                }
                return logsumexp(terms);
            } else if constexpr (std::is_same_v<T, RingSpec>) {
                const double r0 = ring_inner(k), r1 = ring_outer(k);
                const double dx = x[0] - k.center[0], dy = x[1] - k.center[1];
                const double r = std::sqrt(dx * dx + dy * dy);
                if (r < r0 || r > r1) return neg_inf;
                const double area = std::numbers::pi * (r1 * r1 - r0 * r0);
                return -std::log(area);
            } else if constexpr (std::is_same_v<T, UniformBoxSpec>) {
                return k.box.contains(x) ? -std::log(k.box.volume()) : neg_inf;
            } else if constexpr (std::is_same_v<T, CornerBoxSpec>) {
                return k.box.contains(x) ? -std::log(k.box.volume()) : neg_inf;
            }
        },
        spec.kind());
}

SupportRegion support_region(const DistributionSpec& spec, double mass_level) {
    if (!(mass_level > 0.0 && mass_level < 1.0)) {
        throw ConfigError("support_region: mass_level must be in (0,1)");
    }
    SupportRegion region;
    region.spec_ = std::make_shared<DistributionSpec>(spec);
    region.mass_level_ = mass_level;

    if (std::holds_alternative<GaussianSpec>(spec.kind())) {
        region.chi2_threshold_ =
            chi2_quantile(mass_level, static_cast<double>(spec.dim()));
    } else if (std::holds_alternative<GaussianMixtureSpec>(spec.kind())) {
        // Discretize the domain, sort cells by density, and accumulate mass
        // until the level is reached; the density of the last admitted cell
        // is the region threshold. 2D only.
        if (spec.dim() != 2) {
            throw ConfigError("support_region: mixture regions are 2D only");
        }
        const std::size_t res = 400;
        const BoxSpec& b = spec.domain_bounds();
        const double cell_w = (b.hi[0] - b.lo[0]) / static_cast<double>(res);
        const double cell_h = (b.hi[1] - b.lo[1]) / static_cast<double>(res);
        const double cell_area = cell_w * cell_h;
        std::vector<double> log_p;
        log_p.reserve(res * res);
        for (std::size_t iy = 0; iy < res; ++iy) {
            for (std::size_t ix = 0; ix < res; ++ix) {
                const double px = b.lo[0] + (static_cast<double>(ix) + 0.5) * cell_w;
                const double py = b.lo[1] + (static_cast<double>(iy) + 0.5) * cell_h;
                const double p[2] = {px, py};
                log_p.push_back(log_density(spec, p));
            }
        }
        std::sort(log_p.begin(), log_p.end(), std::greater<>());
        double mass = 0.0;
        double threshold = log_p.back();
        for (double lp : log_p) {
            mass += std::exp(lp) * cell_area;
            threshold = lp;
            if (mass >= mass_level) break;
        }
        region.log_density_threshold_ = threshold;
    }
    return region;
}

bool SupportRegion::contains(std::span<const double> x) const {
    const DistributionSpec& spec = *spec_;
    if (x.size() != spec.dim()) {
        throw DimensionError("SupportRegion::contains: dimension mismatch");
    }
    return std::visit(
        [&](const auto& k) -> bool {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, GaussianSpec>) {
                return gaussian_mahalanobis_sq(k, x) <= *chi2_threshold_;
            } else if constexpr (std::is_same_v<T, GaussianMixtureSpec>) {
                return log_density(spec, x) >= *log_density_threshold_;
            } else if constexpr (std::is_same_v<T, RingSpec>) {
                return std::isfinite(log_density(spec, x));
            } else if constexpr (std::is_same_v<T, UniformBoxSpec>) {
                return k.box.contains(x);
            } else if constexpr (std::is_same_v<T, CornerBoxSpec>) {
                return k.box.contains(x);
            }
        },
        spec.kind());
}

bool in_support(const DistributionSpec& spec, std::span<const double> x,
                double mass_level) {
    return support_region(spec, mass_level).contains(x);
}

const char* to_string(SourceTag tag) {
    switch (tag) {
        case SourceTag::real: return "real";
        case SourceTag::p0: return "p0";
        case SourceTag::perturbed: return "perturbed";
        case SourceTag::generated: return "generated";
    }
    return "unknown";
}

}  // namespace ebmlab
