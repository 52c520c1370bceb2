#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ebmlab/rng.hpp"
#include "ebmlab/tensor.hpp"

namespace ebmlab {

/// Hidden-layer nonlinearity. All three are twice continuously
/// differentiable, which the second-order input-gradient penalty requires.
enum class Activation { softplus, swish, tanh };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct DenseLayer {
    Tensor weight;  // [out x in]
    Tensor bias;    // [out]
};

/// Flat view of all model parameters in canonical order: layers in network
/// order, each layer's weight entries row-major followed by its bias
/// entries. The order is part of the checkpoint format and must not change.
struct ParamVector {
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }

    static ParamVector zeros(std::size_t n);

    ParamVector& operator+=(const ParamVector& other);
    ParamVector& operator-=(const ParamVector& other);
    ParamVector& operator*=(double c);
    /// this += a * x
    void axpy(double a, const ParamVector& x);
    double dot(const ParamVector& other) const;
    double norm() const;
    bool all_finite() const noexcept;
};

/// Fully connected scalar-output network. The final layer is affine with a
/// single output unit; every hidden layer shares one activation.
class EnergyModel {
public:
    EnergyModel(std::size_t input_dim, std::vector<std::size_t> hidden_sizes,
                Activation activation);

    /// Weights ~ N(0, 2 / fan_in), biases zero.
    static EnergyModel random(std::size_t input_dim,
                              std::vector<std::size_t> hidden_sizes,
                              Activation activation, RngStream& rng);

    std::size_t input_dim() const noexcept { return input_dim_; }
    Activation activation() const noexcept { return activation_; }
    std::size_t layer_count() const noexcept { return layers_.size(); }
    const DenseLayer& layer(std::size_t i) const { return layers_.at(i); }
    DenseLayer& layer(std::size_t i) { return layers_.at(i); }
    std::vector<std::size_t> hidden_sizes() const;
    std::size_t param_count() const noexcept;

    ParamVector params() const;
    void set_params(const ParamVector& p);

private:
    std::size_t input_dim_;
    Activation activation_;
    std::vector<DenseLayer> layers_;
};

/// f(x) for each row of `batch` [n x d] -> [n]. Rows are evaluated one at a
/// time in order, so batched and per-row evaluation agree bitwise.
Tensor energy_forward(const EnergyModel& model, const Tensor& batch);
double energy_forward_one(const EnergyModel& model, std::span<const double> x);

/// df/dx per row: [n x d] -> [n x d].
Tensor grad_input(const EnergyModel& model, const Tensor& batch);

/// Fused forward + input-gradient pass, the sampler hot path. The energy is
/// a byproduct of the gradient's forward trace, so this costs no more than
/// grad_input alone.
struct BatchEval {
    Tensor energy;  // [n]
    Tensor grad;    // [n x d]
};
BatchEval evaluate_with_grad(const EnergyModel& model, const Tensor& batch);

/// Gradient of sum_i out_weights[i] * f(x_i) with respect to the parameters.
/// Linear in out_weights; the weighted form serves both the likelihood-style
/// and the sigmoid-scaled objective gradients.
ParamVector grad_params(const EnergyModel& model, const Tensor& batch,
                        std::span<const double> out_weights);

struct InputGradNormResult {
    double value;     // (1/n) sum_i ||df/dx(x_i)||^2
    ParamVector grad; // exact d(value)/dtheta
};

/// Mean squared input-gradient norm and its exact parameter gradient,
/// obtained by differentiating through the materialized reverse pass.
InputGradNormResult grad_params_of_input_grad_norm(const EnergyModel& model,
                                                   const Tensor& batch);

}  // namespace ebmlab
