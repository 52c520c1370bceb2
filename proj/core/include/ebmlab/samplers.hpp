#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "ebmlab/batch.hpp"
#include "ebmlab/distributions.hpp"
#include "ebmlab/model.hpp"
#include "ebmlab/rng.hpp"

namespace ebmlab {

/// Iterated normalized-gradient ascent. Without ball_radius the walk is
/// unconstrained; with it, every step is projected back onto the l2-ball
/// around each point's own start. A step whose gradient norm falls below
/// zero_grad_tol is skipped for that point, so the cumulative displacement
/// never exceeds step_size * steps.
struct AttackConfig {
    double step_size = 0.1;
    std::size_t steps = 0;
    std::optional<double> ball_radius;
    double zero_grad_tol = 1e-12;
    bool record_trajectory = false;
    std::optional<BoxSpec> clamp_bounds;  // componentwise clamp after each step
};

struct SgldConfig {
    double step_size = 0.1;
    std::size_t steps = 1;
    /// Variance of the per-step Gaussian noise; defaults to the step size.
    std::optional<double> noise_variance;
};

struct TrajectoryRow {
    std::size_t step;
    std::size_t point_index;
    std::vector<double> coords;
    double energy;
};

struct Trajectory {
    std::vector<TrajectoryRow> rows;

    /// Table file: step, point index, coordinates, energy.
    void write_tsv(const std::filesystem::path& path) const;
    /// Points at a fixed step as an overlay-ready batch.
    Batch step_batch(std::size_t step, std::size_t dim, SourceTag tag) const;
};

struct PgdResult {
    Batch batch;
    std::optional<Trajectory> trajectory;
    /// Number of steps actually taken per point (skipped steps excluded).
    std::vector<std::size_t> steps_taken;

    double mean_displacement(const Batch& start) const;
};

void validate(const AttackConfig& cfg);
void validate(const SgldConfig& cfg);

/// Projection onto the closed l2-ball of radius `radius` around `center`.
void project_ball(std::span<double> x, std::span<const double> center, double radius);

/// K steps of x <- x + step_size * grad f / ||grad f||, optionally projected.
/// K = 0 returns the start unchanged. Throws NonFiniteError naming the step
/// index if an energy becomes non-finite mid-chain.
PgdResult pgd_ascend(const EnergyModel& model, const Batch& start,
                     const AttackConfig& cfg, RngStream& rng);

/// Same walk on -f: moves points toward low energy within the ball.
PgdResult pgd_descend(const EnergyModel& model, const Batch& start,
                      const AttackConfig& cfg, RngStream& rng);

/// As pgd_ascend, but projecting onto the ball around explicit per-point
/// centers instead of each point's own start. Used by worst-case OOD
/// restarts, whose random starts differ from the attacked points.
PgdResult pgd_ascend_centered(const EnergyModel& model, const Batch& start,
                              const Tensor& centers, const AttackConfig& cfg,
                              RngStream& rng);

/// x <- x + (step_size/2) * grad f + noise, noise ~ N(0, noise_variance I).
/// Per-point noise substreams are forked from `rng` by point index, so the
/// result is independent of evaluation order.
Batch sgld_chain(const EnergyModel& model, const Batch& start,
                 const SgldConfig& cfg, RngStream& rng);

/// PGD on the weighted sum of several energies sharing one input space.
PgdResult compose_and_ascend(
    std::span<const std::pair<const EnergyModel*, double>> models,
    const Batch& start, const AttackConfig& cfg, RngStream& rng);

/// Ascends every point of the linear interpolation grid between xa and xb
/// (n_points >= 2, endpoints included).
PgdResult interpolate_then_ascend(const EnergyModel& model,
                                  std::span<const double> xa,
                                  std::span<const double> xb,
                                  std::size_t n_points, const AttackConfig& cfg,
                                  RngStream& rng);

}  // namespace ebmlab
