#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "ebmlab/config.hpp"

namespace ebmlab {

/// Runs one experiment (or its variants) under out_root, writing the
/// resolved config, run record, checkpoints, reports, plots, and a manifest
/// with content hashes. Re-running with the same spec and seed overwrites
/// identical content. Returns the run directory.
std::filesystem::path run_experiment(const ExperimentSpec& spec,
                                     const std::filesystem::path& out_root);

/// Aligned table of final metrics across run directories (TSV text).
/// Metrics missing from a run appear as the explicit marker "NA".
std::string compare_runs(std::span<const std::filesystem::path> dirs);

/// hex FNV-1a of a file's bytes, as recorded in run manifests.
std::string file_content_hash(const std::filesystem::path& path);

/// Support probe, maxima census, and sample-quality MMD for an already
/// trained model under a spec (JSON text). Used by the eval subcommand.
std::string evaluate_model_report(const ExperimentSpec& spec,
                                  const EnergyModel& model);

/// Clean and worst-case OOD detection report (JSON text); the spec must
/// have its ood block enabled.
std::string ood_model_report(const ExperimentSpec& spec, const EnergyModel& model);

/// Contour / vector-field plot with the spec's standard overlays.
void write_field_plot(const ExperimentSpec& spec, const EnergyModel& model,
                      const std::filesystem::path& path);

}  // namespace ebmlab
