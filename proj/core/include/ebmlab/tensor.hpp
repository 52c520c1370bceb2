#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ebmlab {

/// Dense row-major tensor of doubles. Rank is dynamic, but nearly all uses
/// are rank-1 vectors and rank-2 [rows x cols] sample batches or weight
/// matrices. Public operations on models and samplers reject NaN/Inf inputs
/// and outputs; a tensor holding non-finite values is an error state.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);  // zero-filled
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor vector(std::vector<double> values);
    static Tensor matrix(std::size_t rows, std::size_t cols,
                         std::vector<double> data);
    static Tensor zeros_like(const Tensor& other);

    const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::size_t rows() const;  // rank-2 only
    std::size_t cols() const;  // rank-2 only

    double& at(std::size_t i);
    double at(std::size_t i) const;
    double& at(std::size_t r, std::size_t c);
    double at(std::size_t r, std::size_t c) const;

    std::span<double> row(std::size_t r);
    std::span<const double> row(std::size_t r) const;

    std::span<double> values() noexcept { return {data_}; }
    std::span<const double> values() const noexcept { return {data_}; }
    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }

    bool all_finite() const noexcept;
    /// Throws NonFiniteError naming `context` if any entry is NaN or Inf.
    void require_finite(const char* context) const;

    bool operator==(const Tensor& other) const = default;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

}  // namespace ebmlab
