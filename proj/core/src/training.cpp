#include "ebmlab/training.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "ebmlab/error.hpp"
#include "ebmlab/objectives.hpp"

namespace ebmlab {

const char* to_string(Objective o) {
    switch (o) {
        case Objective::at_logistic: return "at_logistic";
        case Objective::ebm_mle: return "ebm_mle";
    }
    return "unknown";
}

Objective objective_from_string(const std::string& name) {
    if (name == "at_logistic") return Objective::at_logistic;
    if (name == "ebm_mle") return Objective::ebm_mle;
    throw ConfigError("unknown objective: " + name);
}

void validate(const TrainConfig& cfg) {
    if (cfg.batch_size == 0) throw ConfigError("TrainConfig: batch_size must be >= 1");
    validate(cfg.adam());
    if (cfg.r1_gamma < 0.0) throw ConfigError("TrainConfig: r1_gamma must be non-negative");
    if (cfg.schedule.empty()) throw ConfigError("TrainConfig: schedule must be non-empty");
    for (std::size_t i = 0; i < cfg.schedule.size(); ++i) {
        if (cfg.schedule[i].iterations == 0) {
            throw ConfigError("TrainConfig: schedule iterations must be >= 1");
        }
        if (i > 0 && cfg.schedule[i].k < cfg.schedule[i - 1].k) {
            throw ConfigError("TrainConfig: schedule K values must be non-decreasing");
        }
    }
    validate(cfg.attack);
    if (cfg.real_attack) validate(*cfg.real_attack);
    if (!(cfg.divergence_threshold > 0.0)) {
        throw ConfigError("TrainConfig: divergence_threshold must be positive");
    }
}

RngStream iteration_rng(std::uint64_t seed, std::size_t iteration) {
    return RngStream(derive_seed(seed, "train-iteration", iteration));
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// The schedule-driven loop shared by every trainer variant. One iteration:
// draw both batches, optionally attack the real batch (descent in a small
// ball), run the scheduled number of ascent steps on the source batch, then
// apply a single maximizing Adam update of the configured objective.
RunRecord run_schedule(EnergyModel& model, const DistributionSpec& p_data,
                       const DistributionSpec& p0, const TrainConfig& cfg,
                       const IterationHook& hook) {
    validate(cfg);
    ParamVector theta = model.params();
    OptimizerState state = OptimizerState::zeros(theta.size());
    const AdamConfig adam = cfg.adam();

    RunRecord record;
    std::size_t iteration = 0;
    for (const ScheduleEntry& segment : cfg.schedule) {
        for (std::size_t i = 0; i < segment.iterations; ++i, ++iteration) {
            const auto t0 = Clock::now();
            RngStream rng_iter = iteration_rng(cfg.seed, iteration);
            RngStream rng_real = rng_iter.fork("real");
            RngStream rng_p0 = rng_iter.fork("p0");
            RngStream rng_attack = rng_iter.fork("attack");

            RunRow row;
            row.iteration = iteration;
            row.k = segment.k;
            bool diverged = false;

            try {
                Batch real = sample(p_data, cfg.batch_size, rng_real, SourceTag::real);
                const Batch source = sample(p0, cfg.batch_size, rng_p0, SourceTag::p0);

                if (cfg.real_attack) {
                    real = pgd_descend(model, real, *cfg.real_attack, rng_attack).batch;
                    real.source_tag = SourceTag::real;
                }

                AttackConfig attack = cfg.attack;
                attack.steps = segment.k;
                attack.record_trajectory = false;
                const PgdResult perturbed = pgd_ascend(model, source, attack, rng_attack);
                row.mean_displacement = perturbed.mean_displacement(source);

                LossReport report = cfg.objective == Objective::at_logistic
                                        ? at_training_report(model, real, perturbed.batch)
                                        : ebm_mle_grad(model, real, perturbed.batch);
                row.value = report.value;
                row.real_term = report.real_term;
                row.fake_term = report.fake_term;
                row.gap = report.aux.at("gap");

                // ascent direction of the regularized objective J - penalty
                ParamVector ascent = std::move(report.grad);
                if (cfg.r1_gamma > 0.0) {
                    const R1Result r1 = r1_term(model, real, cfg.r1_gamma);
                    row.r1_value = r1.penalty;
                    ascent -= r1.grad;
                }
                row.grad_norm = ascent.norm();

                if (!std::isfinite(row.value) || !std::isfinite(row.gap) ||
                    !ascent.all_finite() || row.gap > cfg.divergence_threshold) {
                    diverged = true;
                } else {
                    ascent *= -1.0;  // optimizer minimizes
                    adam_step(theta, ascent, state, adam);
                    if (!theta.all_finite()) {
                        diverged = true;
                    } else {
                        model.set_params(theta);
                    }
                }
            } catch (const NonFiniteError&) {
                diverged = true;
            }

            row.wall_ms = elapsed_ms(t0);
            record.rows.push_back(row);
            if (diverged) {
                record.divergence_iteration = iteration;
                return record;
            }
            if (hook) hook(iteration, model);
        }
    }
    return record;
}

}  // namespace

RunRecord train_binary_at(EnergyModel& model, const DistributionSpec& p_data,
                          const DistributionSpec& p0, const TrainConfig& cfg,
                          const IterationHook& hook) {
    if (cfg.objective != Objective::at_logistic) {
        throw ConfigError("train_binary_at: objective must be at_logistic");
    }
    if (cfg.schedule.size() != 1) {
        throw ConfigError("train_binary_at: schedule must have exactly one entry");
    }
    return run_schedule(model, p_data, p0, cfg, hook);
}

RunRecord train_progressive(EnergyModel& model, const DistributionSpec& p_data,
                            const DistributionSpec& p0, const TrainConfig& cfg,
                            const IterationHook& hook) {
    if (cfg.objective != Objective::at_logistic) {
        throw ConfigError("train_progressive: objective must be at_logistic");
    }
    if (cfg.schedule.size() < 2) {
        throw ConfigError("train_progressive: schedule needs at least two entries");
    }
    return run_schedule(model, p_data, p0, cfg, hook);
}

RunRecord train_ebm_mle_with_pgd(EnergyModel& model, const DistributionSpec& p_data,
                                 const DistributionSpec& p0, const TrainConfig& cfg,
                                 const IterationHook& hook) {
    if (cfg.objective != Objective::ebm_mle) {
        throw ConfigError("train_ebm_mle_with_pgd: objective must be ebm_mle");
    }
    return run_schedule(model, p_data, p0, cfg, hook);
}

MinimaxResult train_minimax_particles(EnergyModel& model,
                                      const DistributionSpec& p_data,
                                      const DistributionSpec& p0,
                                      const TrainConfig& cfg,
                                      const MinimaxConfig& mm,
                                      const MinimaxHook& hook) {
    if (cfg.objective != Objective::at_logistic) {
        throw ConfigError("train_minimax_particles: objective must be at_logistic");
    }
    validate(cfg.adam());
    if (mm.particle_count == 0 || mm.critic_steps == 0 || mm.max_rounds == 0) {
        throw ConfigError("train_minimax_particles: counts must be positive");
    }
    if (!(mm.particle_step >= 0.0)) {
        throw ConfigError("train_minimax_particles: particle_step must be non-negative");
    }
    if (cfg.batch_size == 0) throw ConfigError("train_minimax_particles: batch_size must be >= 1");

    ParamVector theta = model.params();
    OptimizerState state = OptimizerState::zeros(theta.size());
    const AdamConfig adam = cfg.adam();

    // Algorithm fixes both sets up front: one real batch, one particle set.
    RngStream rng(derive_seed(cfg.seed, "minimax", 0));
    RngStream rng_real = rng.fork("real");
    RngStream rng_particles = rng.fork("particles");
    const Batch real = sample(p_data, cfg.batch_size, rng_real, SourceTag::real);
    Batch particles = sample(p0, mm.particle_count, rng_particles, SourceTag::p0);

    MinimaxResult result;
    for (std::size_t round = 0; round < mm.max_rounds; ++round) {
        const auto t0 = Clock::now();
        RunRow row;
        row.iteration = round;
        row.k = 1;
        bool diverged = false;

        try {
            // critic phase: train D on the fixed pair until the objective
            // plateaus or the step budget runs out
            double prev_value = 0.0;
            std::size_t flat_streak = 0;
            for (std::size_t t = 0; t < mm.critic_steps; ++t) {
                LossReport report = at_training_report(model, real, particles);
                row.value = report.value;
                row.real_term = report.real_term;
                row.fake_term = report.fake_term;
                row.gap = report.aux.at("gap");

                ParamVector ascent = std::move(report.grad);
                if (cfg.r1_gamma > 0.0) {
                    const R1Result r1 = r1_term(model, real, cfg.r1_gamma);
                    row.r1_value = r1.penalty;
                    ascent -= r1.grad;
                }
                row.grad_norm = ascent.norm();
                ascent *= -1.0;
                adam_step(theta, ascent, state, adam);
                if (!theta.all_finite()) {
                    diverged = true;
                    break;
                }
                model.set_params(theta);

                if (t > 0 && std::abs(row.value - prev_value) < mm.critic_plateau_tol) {
                    if (++flat_streak >= 10) break;
                } else {
                    flat_streak = 0;
                }
                prev_value = row.value;
            }

            if (!diverged) {
                // particle phase: one normalized ascent step each
                AttackConfig step_cfg = cfg.attack;
                step_cfg.steps = 1;
                step_cfg.record_trajectory = false;
                double mean_disp = 0.0;
                if (mm.particle_step > 0.0) {
                    step_cfg.step_size = mm.particle_step;
                    RngStream rng_step = rng.fork("particle-step");
                    const PgdResult moved = pgd_ascend(model, particles, step_cfg, rng_step);
                    mean_disp = moved.mean_displacement(particles);
                    particles = moved.batch;
                    particles.source_tag = SourceTag::generated;
                }
                row.mean_displacement = mean_disp;
            }
        } catch (const NonFiniteError&) {
            diverged = true;
        }

        row.wall_ms = elapsed_ms(t0);
        result.record.rows.push_back(row);
        if (diverged) {
            result.record.divergence_iteration = round;
            break;
        }
        if (hook) hook(round, model, particles);
        if (row.mean_displacement < mm.displacement_tol) break;
    }
    result.particles = std::move(particles);
    return result;
}

}  // namespace ebmlab
