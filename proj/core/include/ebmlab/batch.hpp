#pragma once

#include <string>

#include "ebmlab/tensor.hpp"

namespace ebmlab {

/// Provenance of a sample batch; carried through samplers and plots.
enum class SourceTag { real, p0, perturbed, generated };

const char* to_string(SourceTag tag);

struct Batch {
    Tensor points;  // [n x d]
    SourceTag source_tag = SourceTag::real;

    std::size_t size() const { return points.rows(); }
    std::size_t dim() const { return points.cols(); }
};

}  // namespace ebmlab
