#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "ebmlab/distributions.hpp"
#include "ebmlab/model.hpp"
#include "ebmlab/optimizer.hpp"
#include "ebmlab/run_record.hpp"
#include "ebmlab/samplers.hpp"

namespace ebmlab {

enum class Objective { at_logistic, ebm_mle };

const char* to_string(Objective o);
Objective objective_from_string(const std::string& name);

struct ScheduleEntry {
    std::size_t k = 0;
    std::size_t iterations = 0;
};

struct TrainConfig {
    std::size_t batch_size = 64;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.0;
    double adam_beta2 = 0.99;
    double adam_eps = 1e-8;
    double r1_gamma = 0.0;
    std::vector<ScheduleEntry> schedule;   // attack steps per segment, non-decreasing
    AttackConfig attack;                   // template; steps come from the schedule
    std::optional<AttackConfig> real_attack;  // small-ball descent on real samples
    std::uint64_t seed = 1;
    Objective objective = Objective::at_logistic;
    double divergence_threshold = 1e6;

    AdamConfig adam() const {
        return AdamConfig{learning_rate, adam_beta1, adam_beta2, adam_eps};
    }
};

void validate(const TrainConfig& cfg);

/// Deterministic per-iteration substream; part of the reproducibility
/// contract so tests can regenerate the exact batch sequence of a run.
RngStream iteration_rng(std::uint64_t seed, std::size_t iteration);

/// Called after each parameter update; used by experiment recipes to track
/// sample quality during training.
using IterationHook =
    std::function<void(std::size_t iteration, const EnergyModel& model)>;

/// One segment of the schedule-driven loop, single schedule entry: draw both
/// batches, run K attack steps on the source batch, one maximizing update.
RunRecord train_binary_at(EnergyModel& model, const DistributionSpec& p_data,
                          const DistributionSpec& p0, const TrainConfig& cfg,
                          const IterationHook& hook = {});

/// Multi-segment schedule with shared model and optimizer state; bitwise
/// equal to train_binary_at when the schedule has one entry.
RunRecord train_progressive(EnergyModel& model, const DistributionSpec& p_data,
                            const DistributionSpec& p0, const TrainConfig& cfg,
                            const IterationHook& hook = {});

/// Same loop driven by the unscaled likelihood gradient. Divergence is the
/// expected terminal state: it is recorded in the RunRecord, not thrown.
RunRecord train_ebm_mle_with_pgd(EnergyModel& model, const DistributionSpec& p_data,
                                 const DistributionSpec& p0, const TrainConfig& cfg,
                                 const IterationHook& hook = {});

struct MinimaxConfig {
    std::size_t particle_count = 128;
    std::size_t critic_steps = 30;
    double particle_step = 0.1;
    double displacement_tol = 1e-3;
    std::size_t max_rounds = 400;
    /// Critic phase stops early once |dJ| stays below this over 10 updates.
    double critic_plateau_tol = 1e-6;
};

struct MinimaxResult {
    RunRecord record;
    Batch particles;
};

/// Called after each round with the current particle set.
using MinimaxHook = std::function<void(std::size_t round, const EnergyModel& model,
                                       const Batch& particles)>;

/// Alternating scheme on a fixed particle set: retrain the critic on
/// (fixed real batch, particles), then move each particle one normalized
/// ascent step. Stops when the mean particle displacement per round falls
/// below displacement_tol or the round budget runs out.
MinimaxResult train_minimax_particles(EnergyModel& model,
                                      const DistributionSpec& p_data,
                                      const DistributionSpec& p0,
                                      const TrainConfig& cfg,
                                      const MinimaxConfig& mm,
                                      const MinimaxHook& hook = {});

}  // namespace ebmlab
