#pragma once

#include <filesystem>
#include <span>

#include "ebmlab/batch.hpp"
#include "ebmlab/evaluation.hpp"
#include "ebmlab/model.hpp"

namespace ebmlab {

struct FieldPlotOptions {
    std::size_t contour_levels = 9;  // D levels evenly spaced in (0,1)
    std::size_t arrow_stride = 10;   // grid subsampling for the vector field
    double pixel_size = 720.0;
};

/// Writes an SVG with contours of D = sigmoid(f), a unit-normalized
/// gradient vector field on a subsampled grid, and overlaid point sets
/// colored by source tag. Arrows carry data-gx/data-gy attributes holding
/// the unit gradient in data coordinates so plots can be cross-checked.
/// Output is byte-identical for identical inputs.
void field_plot(const EnergyModel& model, const GridSpec& grid,
                std::span<const Batch> overlays,
                const std::filesystem::path& path,
                const FieldPlotOptions& options = {});

}  // namespace ebmlab
