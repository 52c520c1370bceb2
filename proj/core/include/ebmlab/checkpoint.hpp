#pragma once

#include <filesystem>

#include "ebmlab/model.hpp"

namespace ebmlab {

/// Binary checkpoint: magic string, format version, architecture descriptor
/// (input dim, hidden widths, activation), then all parameters as
/// little-endian 64-bit floats in canonical order. save -> load -> save is
/// byte-identical.
void save_checkpoint(const EnergyModel& model, const std::filesystem::path& path);

EnergyModel load_checkpoint(const std::filesystem::path& path);

}  // namespace ebmlab
