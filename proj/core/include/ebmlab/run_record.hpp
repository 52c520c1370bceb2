#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <vector>

namespace ebmlab {

/// One training iteration's metrics. wall_ms is kept in memory and in the
/// timing sidecar only; the persisted table must be byte-identical across
/// repeated runs of the same seed, which wall-clock time would break.
struct RunRow {
    std::size_t iteration = 0;
    std::size_t k = 0;
    double value = 0.0;      // maximized objective (gap for the likelihood objective)
    double real_term = 0.0;
    double fake_term = 0.0;
    double gap = 0.0;        // mean f(real) - mean f(perturbed)
    double mean_displacement = 0.0;
    double r1_value = 0.0;
    double grad_norm = 0.0;
    double wall_ms = 0.0;
};

struct RunRecord {
    std::vector<RunRow> rows;
    std::optional<std::size_t> divergence_iteration;

    /// Deterministic delimited table, one row per iteration. Excludes wall_ms.
    void write_tsv(const std::filesystem::path& path) const;
    static RunRecord read_tsv(const std::filesystem::path& path);

    /// Per-iteration wall times; never hashed into run manifests.
    void write_timing(const std::filesystem::path& path) const;
};

}  // namespace ebmlab
