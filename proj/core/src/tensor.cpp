#include "ebmlab/tensor.hpp"

#include <cmath>
#include <string>

#include "ebmlab/error.hpp"

namespace ebmlab {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t s : shape) n *= s;
    return n;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_product(shape_)) {
        throw DimensionError("Tensor: data length does not match shape");
    }
}

Tensor Tensor::vector(std::vector<double> values) {
    const std::size_t n = values.size();
    return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::vector<double> data) {
    return Tensor({rows, cols}, std::move(data));
}

Tensor Tensor::zeros_like(const Tensor& other) { return Tensor(other.shape_); }

std::size_t Tensor::rows() const {
    if (rank() != 2) throw DimensionError("Tensor::rows: tensor is not rank-2");
    return shape_[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) throw DimensionError("Tensor::cols: tensor is not rank-2");
    return shape_[1];
}

double& Tensor::at(std::size_t i) {
    if (i >= data_.size()) throw DimensionError("Tensor::at: index out of range");
    return data_[i];
}

double Tensor::at(std::size_t i) const {
    if (i >= data_.size()) throw DimensionError("Tensor::at: index out of range");
    return data_[i];
}

double& Tensor::at(std::size_t r, std::size_t c) {
    if (rank() != 2 || r >= shape_[0] || c >= shape_[1]) {
        throw DimensionError("Tensor::at(r,c): index out of range");
    }
    return data_[r * shape_[1] + c];
}

double Tensor::at(std::size_t r, std::size_t c) const {
    if (rank() != 2 || r >= shape_[0] || c >= shape_[1]) {
        throw DimensionError("Tensor::at(r,c): index out of range");
    }
    return data_[r * shape_[1] + c];
}

std::span<double> Tensor::row(std::size_t r) {
    if (rank() != 2 || r >= shape_[0]) {
        throw DimensionError("Tensor::row: index out of range");
    }
    return {data_.data() + r * shape_[1], shape_[1]};
}

std::span<const double> Tensor::row(std::size_t r) const {
    if (rank() != 2 || r >= shape_[0]) {
        throw DimensionError("Tensor::row: index out of range");
    }
    return {data_.data() + r * shape_[1], shape_[1]};
}

bool Tensor::all_finite() const noexcept {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Tensor::require_finite(const char* context) const {
    if (!all_finite()) {
        throw NonFiniteError(std::string(context) + ": non-finite value in tensor");
    }
}

}  // namespace ebmlab
