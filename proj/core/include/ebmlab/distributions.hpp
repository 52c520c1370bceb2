#pragma once

#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "ebmlab/batch.hpp"
#include "ebmlab/rng.hpp"
#include "ebmlab/tensor.hpp"

namespace ebmlab {

/// Axis-aligned box, lo < hi componentwise.
struct BoxSpec {
    std::vector<double> lo;
    std::vector<double> hi;

    std::size_t dim() const { return lo.size(); }
    double volume() const;
    bool contains(std::span<const double> x) const;
    void clamp(std::span<double> x) const;
};

struct GaussianSpec {
    std::vector<double> mean;
    Tensor cov;  // [d x d], symmetric positive definite
};

struct MixtureComponent {
    double weight;
    GaussianSpec gaussian;
};

struct GaussianMixtureSpec {
    std::vector<MixtureComponent> components;  // weights positive, sum to 1
};

/// Uniform mass on the annulus of radii [radius - thickness/2, radius + thickness/2].
struct RingSpec {
    std::vector<double> center;
    double radius;
    double thickness;
};

struct UniformBoxSpec {
    BoxSpec box;
};

/// Same law as UniformBoxSpec; the distinct kind marks a deliberately
/// concentrated source placed in one corner of the domain.
struct CornerBoxSpec {
    BoxSpec box;
};

/// Generative description of a synthetic distribution plus the domain box
/// the experiment lives in. Validated on construction.
class DistributionSpec {
public:
    using Kind = std::variant<GaussianSpec, GaussianMixtureSpec, RingSpec,
                              UniformBoxSpec, CornerBoxSpec>;

    DistributionSpec(Kind kind, BoxSpec domain_bounds, bool clamp_samples = false);

    const Kind& kind() const noexcept { return kind_; }
    const BoxSpec& domain_bounds() const noexcept { return domain_bounds_; }
    bool clamp_samples() const noexcept { return clamp_samples_; }
    std::size_t dim() const noexcept { return domain_bounds_.dim(); }
    const char* kind_name() const noexcept;

private:
    Kind kind_;
    BoxSpec domain_bounds_;
    bool clamp_samples_;
};

/// n i.i.d. draws; identical batches for identical rng state, bitwise.
Batch sample(const DistributionSpec& spec, std::size_t n, RngStream& rng,
             SourceTag tag = SourceTag::real);

/// Exact log density. Uniform kinds return log(1/volume) inside their
/// support and -inf outside.
double log_density(const DistributionSpec& spec, std::span<const double> x);

/// Highest-density region holding `mass_level` of the probability mass.
/// Gaussians use the exact chi-square radius; uniform kinds are their own
/// support for every level; mixtures discretize the 2D domain once and
/// derive a density threshold from the level sets.
class SupportRegion {
public:
    bool contains(std::span<const double> x) const;
    double mass_level() const noexcept { return mass_level_; }

private:
    friend SupportRegion support_region(const DistributionSpec&, double);
    std::shared_ptr<const DistributionSpec> spec_;
    double mass_level_ = 0.0;
    std::optional<double> chi2_threshold_;         // gaussians
    std::optional<double> log_density_threshold_;  // mixtures
};

SupportRegion support_region(const DistributionSpec& spec, double mass_level);

/// True iff x lies in the highest-density region containing mass_level of
/// the mass. Convenience wrapper; probes over many points should build the
/// SupportRegion once.
bool in_support(const DistributionSpec& spec, std::span<const double> x,
                double mass_level);

/// Lower Cholesky factor of a symmetric positive definite matrix.
Tensor cholesky(const Tensor& spd);

}  // namespace ebmlab
