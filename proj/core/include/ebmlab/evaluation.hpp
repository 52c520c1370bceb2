#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ebmlab/batch.hpp"
#include "ebmlab/distributions.hpp"
#include "ebmlab/model.hpp"
#include "ebmlab/run_record.hpp"
#include "ebmlab/samplers.hpp"

namespace ebmlab {

/// Regular 2D evaluation grid, endpoints included on both axes.
struct GridSpec {
    BoxSpec bounds;
    std::size_t resolution = 200;
};

void validate(const GridSpec& grid);

/// Grid coordinates along one axis.
std::vector<double> grid_axis(const GridSpec& grid, std::size_t axis);

struct SupportProbeReport {
    double mean_abs_dev_on_support = 0.0;   // mean |D - 1/2| inside the region
    double max_d_off_support = 0.0;         // max D outside
    double fraction_off_support_leq_half = 0.0;
    std::size_t on_count = 0;
    std::size_t off_count = 0;
};

/// Evaluates D = sigmoid(f) on the grid, partitioned by the mass_level
/// highest-density region of p_data. Purely descriptive.
SupportProbeReport support_probe(const EnergyModel& model,
                                 const DistributionSpec& p_data,
                                 const GridSpec& grid, double mass_level);

struct MaximaCensus {
    std::vector<std::array<double, 2>> all;          // every strict local maximum
    std::vector<std::array<double, 2>> off_support;  // those outside the region
};

/// A grid point is a local maximum when f exceeds all 8 neighbors by at
/// least `margin` (so constants report none). Boundary points are skipped.
/// When a region is given, maxima outside it are listed separately.
MaximaCensus local_maxima_census(const EnergyModel& model, const GridSpec& grid,
                                 double margin,
                                 const SupportRegion* region = nullptr);

/// Unbiased squared MMD with a sum of Gaussian kernels
/// k(x,y) = sum_b exp(-||x-y||^2 / (2 b^2)) over the listed bandwidths.
double mmd2(const Batch& a, const Batch& b, std::span<const double> bandwidths);

/// Null distribution of mmd2 under exchangeability: pool both batches,
/// reshuffle into the original sizes, recompute. Used to calibrate
/// "statistically indistinguishable" thresholds.
std::vector<double> mmd2_permutation_null(const Batch& a, const Batch& b,
                                          std::span<const double> bandwidths,
                                          std::size_t permutations,
                                          RngStream& rng);

/// Rank-based AUROC of in-scores vs out-scores, ties counted half.
/// Higher score = more in-distribution.
double ood_auroc(std::span<const double> in_scores,
                 std::span<const double> out_scores);
double ood_auroc(const EnergyModel& model, const Batch& in_batch,
                 const Batch& out_batch);

struct OodReport {
    double clean_auroc = 0.0;
    double adversarial_auroc = 0.0;
    AttackConfig attack;
    std::size_t restarts = 0;
    std::string score_direction = "higher f = more in-distribution";
};

/// Worst-case OOD detection: every OOD point is replaced by its strongest
/// restart (random starts inside the ball, then projected ascent steps;
/// the unattacked point competes too, so scores never decrease).
OodReport adversarial_ood_auroc(const EnergyModel& model, const Batch& in_batch,
                                const Batch& out_batch, const AttackConfig& attack,
                                std::size_t restarts, RngStream& rng);

struct DivergenceFlag {
    bool diverged = false;
    std::optional<std::size_t> iteration;
};

/// First iteration whose gap statistic exceeds `threshold` or is non-finite.
DivergenceFlag divergence_monitor(const RunRecord& record, double threshold);

}  // namespace ebmlab
