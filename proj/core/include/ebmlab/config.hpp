#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ebmlab/distributions.hpp"
#include "ebmlab/evaluation.hpp"
#include "ebmlab/training.hpp"

namespace ebmlab {

enum class Algorithm { binary_at, minimax_particles };

const char* to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& name);

/// Worst-case OOD detection settings for a recipe.
struct OodConfig {
    bool enabled = false;
    std::optional<DistributionSpec> spec;  // the out-distribution
    std::size_t n_samples = 512;
    double small_radius = 0.25;
    double large_radius = 100.0;
    double step_size = 0.1;
    std::size_t steps = 100;
    std::size_t restarts = 5;
};

/// Evaluation settings shared by probes, plots, and during-training metrics.
struct EvalConfig {
    std::size_t grid_resolution = 200;
    double mass_level = 0.95;
    double maxima_margin = 1e-6;
    std::vector<double> mmd_bandwidths = {0.25, 0.5, 1.0};
    /// Sample-quality cadence during training; 0 disables the metric table.
    std::size_t metric_every = 0;
    std::size_t metric_batch = 256;
    /// Convergence threshold on the metric-table MMD (0 = unset), reached
    /// when `mmd_threshold_window` consecutive measurements stay below it.
    double mmd_threshold = 0.0;
    std::size_t mmd_threshold_window = 1;
    /// Fixed test-time generation budget, independent of the training K.
    AttackConfig generation{0.1, 25, std::nullopt, 1e-12, false, std::nullopt};
    /// Where generated samples start: the recipe's own source distribution,
    /// or a uniform draw over the domain box (comparable across ablation
    /// variants that train on different sources).
    enum class GenerationSource { p0, domain };
    GenerationSource generation_source = GenerationSource::p0;
    std::size_t overlay_points = 256;
};

/// One sub-run of an ablation recipe: a JSON merge patch applied on top of
/// the resolved base config.
struct VariantSpec {
    std::string name;
    std::string patch_json;
};

/// Fully resolved experiment description; the top-level config file maps
/// onto this 1:1 and the canonical serialized form is echoed into every run
/// directory.
struct ExperimentSpec {
    std::string id = "custom";
    std::uint64_t seed = 1;

    std::size_t input_dim = 2;
    std::vector<std::size_t> hidden = {64, 64, 64};
    Activation activation = Activation::softplus;

    std::optional<DistributionSpec> p_data;
    std::optional<DistributionSpec> p0;

    Algorithm algorithm = Algorithm::binary_at;
    TrainConfig train;
    MinimaxConfig minimax;
    EvalConfig eval;
    OodConfig ood;

    std::vector<std::string> outputs;
    std::vector<VariantSpec> variants;

    std::string resolved_json;  // canonical form, echoed verbatim

    const DistributionSpec& data_spec() const;
    const DistributionSpec& source_spec() const;
};

/// Loads `path_or_name` (a config file path, or a built-in recipe name),
/// fills documented defaults, applies dotted-path overrides last, then the
/// seed override. Unknown keys, bad types, and overrides naming nonexistent
/// keys are ConfigErrors naming the offending key.
ExperimentSpec resolve_config(const std::string& path_or_name,
                              std::span<const std::string> overrides = {},
                              std::optional<std::uint64_t> seed_override = {});

/// Re-resolves a variant: base resolved JSON + merge patch, new id/seed.
ExperimentSpec resolve_variant(const ExperimentSpec& base, const VariantSpec& variant);

std::vector<std::string> builtin_recipe_names();
bool is_builtin_recipe(const std::string& name);
std::string builtin_recipe_json(const std::string& name);

/// The full default configuration as canonical JSON (the schema).
std::string default_config_json();

}  // namespace ebmlab
