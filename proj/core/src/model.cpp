#include "ebmlab/model.hpp"

#include <cmath>
#include <string>

#include "ebmlab/error.hpp"
#include "ebmlab/numerics.hpp"

namespace ebmlab {

const char* to_string(Activation a) {
    switch (a) {
        case Activation::softplus: return "softplus";
        case Activation::swish: return "swish";
        case Activation::tanh: return "tanh";
    }
    return "unknown";
}

Activation activation_from_string(const std::string& name) {
    if (name == "softplus") return Activation::softplus;
    if (name == "swish") return Activation::swish;
    if (name == "tanh") return Activation::tanh;
    throw ConfigError("unknown activation: " + name);
}

namespace {

double act(Activation a, double t) {
    switch (a) {
        case Activation::softplus: return softplus(t);
        case Activation::swish: return t * sigmoid(t);
        case Activation::tanh: return std::tanh(t);
    }
    return 0.0;
}

double act_d(Activation a, double t) {
    switch (a) {
        case Activation::softplus: return sigmoid(t);
        case Activation::swish: {
            const double s = sigmoid(t);
            return s * (1.0 + t * (1.0 - s));
        }
        case Activation::tanh: {
            const double y = std::tanh(t);
            return 1.0 - y * y;
        }
    }
    return 0.0;
}

double act_dd(Activation a, double t) {
    switch (a) {
        case Activation::softplus: {
            const double s = sigmoid(t);
            return s * (1.0 - s);
        }
        case Activation::swish: {
            const double s = sigmoid(t);
            return s * (1.0 - s) * (2.0 + t * (1.0 - 2.0 * s));
        }
        case Activation::tanh: {
            const double y = std::tanh(t);
            return -2.0 * y * (1.0 - y * y);
        }
    }
    return 0.0;
}

// out[i] = sum_j W[i,j] v[j]
void mat_vec(const Tensor& w, std::span<const double> v, std::span<double> out) {
    const std::size_t r = w.rows(), c = w.cols();
    const double* wd = w.data();
    for (std::size_t i = 0; i < r; ++i) {
        double s = 0.0;
        const double* row = wd + i * c;
        for (std::size_t j = 0; j < c; ++j) s += row[j] * v[j];
        out[i] = s;
    }
}

// out[j] = sum_i W[i,j] v[i]
void mat_t_vec(const Tensor& w, std::span<const double> v, std::span<double> out) {
    const std::size_t r = w.rows(), c = w.cols();
    const double* wd = w.data();
    for (std::size_t j = 0; j < c; ++j) out[j] = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
        const double vi = v[i];
        const double* row = wd + i * c;
        for (std::size_t j = 0; j < c; ++j) out[j] += row[j] * vi;
    }
}

// acc[i,j] += a[i] * b[j]
void add_outer(Tensor& acc, std::span<const double> a, std::span<const double> b) {
    const std::size_t r = acc.rows(), c = acc.cols();
    double* d = acc.data();
    for (std::size_t i = 0; i < r; ++i) {
        const double ai = a[i];
        double* row = d + i * c;
        for (std::size_t j = 0; j < c; ++j) row[j] += ai * b[j];
    }
}

// Per-sample forward activations. pre[l] holds the affine output of layer l;
// post[l] the activated output for hidden layers (unused for the last layer).
struct Trace {
    std::vector<std::vector<double>> pre;
    std::vector<std::vector<double>> post;

    void resize(const EnergyModel& m) {
        const std::size_t n = m.layer_count();
        pre.resize(n);
        post.resize(n);
        for (std::size_t l = 0; l < n; ++l) {
            pre[l].resize(m.layer(l).bias.size());
            post[l].resize(m.layer(l).bias.size());
        }
    }
};

double forward_trace(const EnergyModel& m, std::span<const double> x, Trace& tr) {
    const std::size_t n_layers = m.layer_count();
    std::span<const double> cur = x;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const DenseLayer& layer = m.layer(l);
        mat_vec(layer.weight, cur, tr.pre[l]);
        const std::size_t width = tr.pre[l].size();
        for (std::size_t i = 0; i < width; ++i) tr.pre[l][i] += layer.bias.data()[i];
        if (l + 1 < n_layers) {
            for (std::size_t i = 0; i < width; ++i) {
                tr.post[l][i] = act(m.activation(), tr.pre[l][i]);
            }
            cur = tr.post[l];
        }
    }
    return tr.pre[n_layers - 1][0];
}

// Layer-shaped gradient accumulator, flattened at the end in canonical order.
struct GradBuffer {
    std::vector<Tensor> w;
    std::vector<Tensor> b;

    explicit GradBuffer(const EnergyModel& m) {
        for (std::size_t l = 0; l < m.layer_count(); ++l) {
            w.push_back(Tensor::zeros_like(m.layer(l).weight));
            b.push_back(Tensor::zeros_like(m.layer(l).bias));
        }
    }

    ParamVector flatten() const {
        ParamVector p;
        for (std::size_t l = 0; l < w.size(); ++l) {
            p.values.insert(p.values.end(), w[l].values().begin(), w[l].values().end());
            p.values.insert(p.values.end(), b[l].values().begin(), b[l].values().end());
        }
        return p;
    }
};

void check_batch(const EnergyModel& m, const Tensor& batch, const char* op) {
    if (batch.rank() != 2) {
        throw DimensionError(std::string(op) + ": batch must be rank-2 [n x d]");
    }
    if (batch.cols() != m.input_dim()) {
        throw DimensionError(std::string(op) + ": batch width " +
                             std::to_string(batch.cols()) + " does not match input_dim " +
                             std::to_string(m.input_dim()));
    }
    batch.require_finite(op);
}

}  // namespace

ParamVector ParamVector::zeros(std::size_t n) {
    ParamVector p;
    p.values.assign(n, 0.0);
    return p;
}

ParamVector& ParamVector::operator+=(const ParamVector& other) {
    if (values.size() != other.values.size()) {
        throw DimensionError("ParamVector::operator+=: length mismatch");
    }
    for (std::size_t i = 0; i < values.size(); ++i) values[i] += other.values[i];
    return *this;
}

ParamVector& ParamVector::operator-=(const ParamVector& other) {
    if (values.size() != other.values.size()) {
        throw DimensionError("ParamVector::operator-=: length mismatch");
    }
    for (std::size_t i = 0; i < values.size(); ++i) values[i] -= other.values[i];
    return *this;
}

ParamVector& ParamVector::operator*=(double c) {
    for (double& v : values) v *= c;
    return *this;
}

void ParamVector::axpy(double a, const ParamVector& x) {
    if (values.size() != x.values.size()) {
        throw DimensionError("ParamVector::axpy: length mismatch");
    }
    for (std::size_t i = 0; i < values.size(); ++i) values[i] += a * x.values[i];
}

double ParamVector::dot(const ParamVector& other) const {
    if (values.size() != other.values.size()) {
        throw DimensionError("ParamVector::dot: length mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) s += values[i] * other.values[i];
    return s;
}

double ParamVector::norm() const { return ebmlab::norm(values); }

bool ParamVector::all_finite() const noexcept {
    for (double v : values) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

EnergyModel::EnergyModel(std::size_t input_dim, std::vector<std::size_t> hidden_sizes,
                         Activation activation)
    : input_dim_(input_dim), activation_(activation) {
    if (input_dim == 0) throw ConfigError("EnergyModel: input_dim must be positive");
    std::size_t fan_in = input_dim;
    for (std::size_t h : hidden_sizes) {
        if (h == 0) throw ConfigError("EnergyModel: hidden layer width must be positive");
        layers_.push_back({Tensor({h, fan_in}), Tensor({h})});
        fan_in = h;
    }
    layers_.push_back({Tensor({1, fan_in}), Tensor({1})});
}

EnergyModel EnergyModel::random(std::size_t input_dim,
                                std::vector<std::size_t> hidden_sizes,
                                Activation activation, RngStream& rng) {
    EnergyModel m(input_dim, std::move(hidden_sizes), activation);
    for (std::size_t l = 0; l < m.layer_count(); ++l) {
        Tensor& w = m.layer(l).weight;
        const double stddev = std::sqrt(2.0 / static_cast<double>(w.cols()));
        for (double& v : w.values()) v = rng.normal(0.0, stddev);
    }
    return m;
}

std::vector<std::size_t> EnergyModel::hidden_sizes() const {
    std::vector<std::size_t> h;
    for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
        h.push_back(layers_[l].bias.size());
    }
    return h;
}

std::size_t EnergyModel::param_count() const noexcept {
    std::size_t n = 0;
    for (const DenseLayer& layer : layers_) {
        n += layer.weight.size() + layer.bias.size();
    }
    return n;
}

ParamVector EnergyModel::params() const {
    ParamVector p;
    p.values.reserve(param_count());
    for (const DenseLayer& layer : layers_) {
        p.values.insert(p.values.end(), layer.weight.values().begin(),
                        layer.weight.values().end());
        p.values.insert(p.values.end(), layer.bias.values().begin(),
                        layer.bias.values().end());
    }
    return p;
}

void EnergyModel::set_params(const ParamVector& p) {
    if (p.size() != param_count()) {
        throw DimensionError("EnergyModel::set_params: length mismatch");
    }
    std::size_t k = 0;
    for (DenseLayer& layer : layers_) {
        for (double& v : layer.weight.values()) v = p.values[k++];
        for (double& v : layer.bias.values()) v = p.values[k++];
    }
}

double energy_forward_one(const EnergyModel& model, std::span<const double> x) {
    if (x.size() != model.input_dim()) {
        throw DimensionError("energy_forward_one: input width mismatch");
    }
    Trace tr;
    tr.resize(model);
    const double f = forward_trace(model, x, tr);
    if (!std::isfinite(f)) throw NonFiniteError("energy_forward_one: non-finite energy");
    return f;
}

Tensor energy_forward(const EnergyModel& model, const Tensor& batch) {
    check_batch(model, batch, "energy_forward");
    const std::size_t n = batch.rows();
    Tensor out({n});
    Trace tr;
    tr.resize(model);
    for (std::size_t i = 0; i < n; ++i) {
        out.values()[i] = forward_trace(model, batch.row(i), tr);
    }
    out.require_finite("energy_forward");
    return out;
}

namespace {

BatchEval eval_with_grad_impl(const EnergyModel& model, const Tensor& batch,
                              const char* op) {
    check_batch(model, batch, op);
    const std::size_t n = batch.rows();
    const std::size_t d = model.input_dim();
    const std::size_t n_layers = model.layer_count();
    BatchEval out{Tensor({n}), Tensor({n, d})};

    Trace tr;
    tr.resize(model);
    std::vector<double> t, u;
    for (std::size_t i = 0; i < n; ++i) {
        out.energy.values()[i] = forward_trace(model, batch.row(i), tr);
        // df/d(h_{L-2}) is the single output row of the last weight matrix
        const Tensor& w_last = model.layer(n_layers - 1).weight;
        t.assign(w_last.row(0).begin(), w_last.row(0).end());
        for (std::size_t l = n_layers - 1; l-- > 0;) {
            const std::size_t width = tr.pre[l].size();
            u.resize(width);
            for (std::size_t k = 0; k < width; ++k) {
                u[k] = act_d(model.activation(), tr.pre[l][k]) * t[k];
            }
            t.resize(model.layer(l).weight.cols());
            mat_t_vec(model.layer(l).weight, u, t);
        }
        std::span<double> row = out.grad.row(i);
        for (std::size_t j = 0; j < d; ++j) row[j] = t[j];
    }
    out.energy.require_finite(op);
    out.grad.require_finite(op);
    return out;
}

}  // namespace

Tensor grad_input(const EnergyModel& model, const Tensor& batch) {
    return eval_with_grad_impl(model, batch, "grad_input").grad;
}

BatchEval evaluate_with_grad(const EnergyModel& model, const Tensor& batch) {
    return eval_with_grad_impl(model, batch, "evaluate_with_grad");
}

ParamVector grad_params(const EnergyModel& model, const Tensor& batch,
                        std::span<const double> out_weights) {
    check_batch(model, batch, "grad_params");
    if (out_weights.size() != batch.rows()) {
        throw DimensionError("grad_params: out_weights length must equal batch rows");
    }
    const std::size_t n_layers = model.layer_count();
    GradBuffer grads(model);

    Trace tr;
    tr.resize(model);
    std::vector<double> bar_h, bar_s;
    for (std::size_t i = 0; i < batch.rows(); ++i) {
        const double c = out_weights[i];
        if (c == 0.0) continue;
        const std::span<const double> x = batch.row(i);
        forward_trace(model, x, tr);

        // last layer: adjoint of its affine output is c
        const std::span<const double> in_last =
            n_layers == 1 ? x : std::span<const double>(tr.post[n_layers - 2]);
        {
            std::span<double> wrow = grads.w[n_layers - 1].row(0);
            for (std::size_t j = 0; j < wrow.size(); ++j) wrow[j] += c * in_last[j];
            grads.b[n_layers - 1].values()[0] += c;
        }
        if (n_layers == 1) continue;

        const Tensor& w_last = model.layer(n_layers - 1).weight;
        bar_h.assign(w_last.cols(), 0.0);
        for (std::size_t j = 0; j < bar_h.size(); ++j) bar_h[j] = c * w_last.row(0)[j];

        for (std::size_t l = n_layers - 1; l-- > 0;) {
            const std::size_t width = tr.pre[l].size();
            bar_s.resize(width);
            for (std::size_t k = 0; k < width; ++k) {
                bar_s[k] = act_d(model.activation(), tr.pre[l][k]) * bar_h[k];
            }
            const std::span<const double> in_l =
                l == 0 ? x : std::span<const double>(tr.post[l - 1]);
            add_outer(grads.w[l], bar_s, in_l);
            for (std::size_t k = 0; k < width; ++k) grads.b[l].values()[k] += bar_s[k];
            if (l > 0) {
                bar_h.resize(model.layer(l).weight.cols());
                mat_t_vec(model.layer(l).weight, bar_s, bar_h);
            }
        }
    }
    return grads.flatten();
}

InputGradNormResult grad_params_of_input_grad_norm(const EnergyModel& model,
                                                   const Tensor& batch) {
    check_batch(model, batch, "grad_params_of_input_grad_norm");
    const std::size_t n = batch.rows();
    const std::size_t n_layers = model.layer_count();
    const std::size_t n_hidden = n_layers - 1;
    const double inv_n = 1.0 / static_cast<double>(n);
    const Activation a = model.activation();

    GradBuffer grads(model);
    double value = 0.0;

    Trace tr;
    tr.resize(model);
    // Backward-pass intermediates kept per hidden layer. tvec[l] is the
    // adjoint of the activated output h_l, uvec[l] of the affine output s_l;
    // dvec/ddvec cache the first and second activation derivatives at s_l.
    std::vector<std::vector<double>> tvec(n_hidden), uvec(n_hidden), dvec(n_hidden),
        ddvec(n_hidden), bar_s(n_hidden);
    std::vector<double> g, bar_g, bar_u, bar_t, bar_h, bar_s_total;

    for (std::size_t i = 0; i < n; ++i) {
        const std::span<const double> x = batch.row(i);
        forward_trace(model, x, tr);

        const Tensor& w_last = model.layer(n_layers - 1).weight;
        if (n_layers == 1) {
            // f = w.x + b: the input gradient is w, so d||w||^2/dw = 2w.
            g.assign(w_last.row(0).begin(), w_last.row(0).end());
            value += squared_norm(g) * inv_n;
            std::span<double> wrow = grads.w[0].row(0);
            for (std::size_t j = 0; j < wrow.size(); ++j) {
                wrow[j] += 2.0 * g[j] * inv_n;
            }
            continue;
        }

        // First-order reverse pass, materialized: t_{L-2} .. t_0, u_* and g.
        for (std::size_t l = 0; l < n_hidden; ++l) {
            const std::size_t width = tr.pre[l].size();
            dvec[l].resize(width);
            ddvec[l].resize(width);
            for (std::size_t k = 0; k < width; ++k) {
                dvec[l][k] = act_d(a, tr.pre[l][k]);
                ddvec[l][k] = act_dd(a, tr.pre[l][k]);
            }
        }
        tvec[n_hidden - 1].assign(w_last.row(0).begin(), w_last.row(0).end());
        for (std::size_t l = n_hidden; l-- > 0;) {
            const std::size_t width = tr.pre[l].size();
            uvec[l].resize(width);
            for (std::size_t k = 0; k < width; ++k) {
                uvec[l][k] = dvec[l][k] * tvec[l][k];
            }
            if (l > 0) {
                tvec[l - 1].resize(model.layer(l).weight.cols());
                mat_t_vec(model.layer(l).weight, uvec[l], tvec[l - 1]);
            }
        }
        g.resize(model.layer(0).weight.cols());
        mat_t_vec(model.layer(0).weight, uvec[0], g);
        value += squared_norm(g) * inv_n;

        // Second reverse pass: differentiate ||g||^2 through the graph above.
        bar_g.resize(g.size());
        for (std::size_t j = 0; j < g.size(); ++j) bar_g[j] = 2.0 * g[j] * inv_n;

        for (std::size_t l = 0; l < n_hidden; ++l) {
            bar_s[l].assign(tr.pre[l].size(), 0.0);
        }

        // through g = W_0^T u_0
        add_outer(grads.w[0], uvec[0], bar_g);
        bar_u.resize(uvec[0].size());
        mat_vec(model.layer(0).weight, bar_g, bar_u);

        for (std::size_t l = 0; l < n_hidden; ++l) {
            const std::size_t width = tr.pre[l].size();
            // u_l = phi'(s_l) * t_l
            bar_t.resize(width);
            for (std::size_t k = 0; k < width; ++k) {
                bar_s[l][k] += ddvec[l][k] * tvec[l][k] * bar_u[k];
                bar_t[k] = dvec[l][k] * bar_u[k];
            }
            if (l + 1 < n_hidden) {
                // t_l = W_{l+1}^T u_{l+1}
                add_outer(grads.w[l + 1], uvec[l + 1], bar_t);
                bar_u.resize(uvec[l + 1].size());
                mat_vec(model.layer(l + 1).weight, bar_t, bar_u);
            } else {
                // t_{L-2} is the output row of the last weight matrix
                std::span<double> wrow = grads.w[n_layers - 1].row(0);
                for (std::size_t j = 0; j < wrow.size(); ++j) wrow[j] += bar_t[j];
            }
        }

        // through the forward pass: s_l = W_l h_{l-1} + b_l, h_l = phi(s_l)
        bar_h.assign(tr.pre[n_hidden - 1].size(), 0.0);
        for (std::size_t l = n_hidden; l-- > 0;) {
            const std::size_t width = tr.pre[l].size();
            bar_s_total.resize(width);
            for (std::size_t k = 0; k < width; ++k) {
                bar_s_total[k] = bar_s[l][k] + dvec[l][k] * bar_h[k];
            }
            const std::span<const double> in_l =
                l == 0 ? x : std::span<const double>(tr.post[l - 1]);
            add_outer(grads.w[l], bar_s_total, in_l);
            for (std::size_t k = 0; k < width; ++k) {
                grads.b[l].values()[k] += bar_s_total[k];
            }
            if (l > 0) {
                bar_h.resize(model.layer(l).weight.cols());
                mat_t_vec(model.layer(l).weight, bar_s_total, bar_h);
            }
        }
    }

    InputGradNormResult result{value, grads.flatten()};
    if (!std::isfinite(result.value) || !result.grad.all_finite()) {
        throw NonFiniteError("grad_params_of_input_grad_norm: non-finite result");
    }
    return result;
}

}  // namespace ebmlab
