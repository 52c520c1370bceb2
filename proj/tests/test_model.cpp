#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "ebmlab/checkpoint.hpp"
#include "ebmlab/error.hpp"
#include "ebmlab/model.hpp"
#include "ebmlab/numerics.hpp"
#include "ebmlab/rng.hpp"

using namespace ebmlab;

namespace {

// Independent straight-line forward evaluator: plain loops, no shared code
// with the library's trace-based implementation.
double oracle_forward(const EnergyModel& m, std::span<const double> x) {
    std::vector<double> cur(x.begin(), x.end());
    for (std::size_t l = 0; l < m.layer_count(); ++l) {
        const Tensor& w = m.layer(l).weight;
        const Tensor& b = m.layer(l).bias;
        std::vector<double> next(w.rows());
        for (std::size_t i = 0; i < w.rows(); ++i) {
            double s = b.at(i);
            for (std::size_t j = 0; j < w.cols(); ++j) s += w.at(i, j) * cur[j];
            next[i] = s;
        }
        if (l + 1 < m.layer_count()) {
            for (double& v : next) {
                switch (m.activation()) {
                    case Activation::softplus: v = std::log1p(std::exp(-std::abs(v))) + (v > 0 ? v : 0); break;
                    case Activation::swish: v = v / (1.0 + std::exp(-v)); break;
                    case Activation::tanh: v = std::tanh(v); break;
                }
            }
        }
        cur = std::move(next);
    }
    return cur[0];
}

double vec_rel_err(std::span<const double> a, std::span<const double> b) {
    double diff = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-300});
}

EnergyModel linear_model(std::vector<double> w, double b) {
    EnergyModel m(w.size(), {}, Activation::tanh);
    for (std::size_t j = 0; j < w.size(); ++j) m.layer(0).weight.at(0, j) = w[j];
    m.layer(0).bias.at(0) = b;
    return m;
}

}  // namespace

TEST_CASE("energy_forward: zero-weight network outputs its final bias") {
    EnergyModel m(2, {4, 3}, Activation::tanh);  // all weights zero
    m.layer(2).bias.at(0) = 0.7;
    const Tensor batch({3, 2}, {1.0, -2.0, 0.0, 0.0, 5.0, 5.0});
    const Tensor out = energy_forward(m, batch);
    for (double v : out.values()) CHECK(v == doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("energy_forward: single linear layer is a dot product") {
    const EnergyModel m = linear_model({1.0, 2.0}, 0.0);
    const Tensor batch({1, 2}, {3.0, 4.0});
    CHECK(energy_forward(m, batch).values()[0] == 11.0);
}

TEST_CASE("energy_forward matches an independent evaluator on a random net") {
    RngStream rng(2024);
    const EnergyModel m = EnergyModel::random(2, {16, 16}, Activation::softplus, rng);
    Tensor batch({8, 2});
    for (double& v : batch.values()) v = rng.normal();
    const Tensor out = energy_forward(m, batch);
    for (std::size_t i = 0; i < 8; ++i) {
        const double expected = oracle_forward(m, batch.row(i));
        CHECK(std::abs(out.values()[i] - expected) <=
              1e-12 * std::max(1.0, std::abs(expected)));
    }
}

TEST_CASE("energy_forward is batch-consistent bitwise") {
    RngStream rng(7);
    const EnergyModel m = EnergyModel::random(3, {8, 8}, Activation::swish, rng);
    Tensor batch({5, 3});
    for (double& v : batch.values()) v = rng.normal();
    const Tensor all = energy_forward(m, batch);
    for (std::size_t i = 0; i < 5; ++i) {
        const std::span<const double> row = batch.row(i);
        const Tensor single({1, 3}, std::vector<double>(row.begin(), row.end()));
        CHECK(energy_forward(m, single).values()[0] == all.values()[i]);
        CHECK(energy_forward_one(m, row) == all.values()[i]);
    }
}

TEST_CASE("energy_forward rejects bad input") {
    const EnergyModel m = linear_model({1.0, 1.0}, 0.0);
    CHECK_THROWS_AS(energy_forward(m, Tensor({2, 3})), DimensionError);
    Tensor bad({1, 2}, {1.0, std::numeric_limits<double>::quiet_NaN()});
    CHECK_THROWS_AS(energy_forward(m, bad), NonFiniteError);
}

TEST_CASE("grad_input: linear model has constant gradient") {
    const EnergyModel m = linear_model({3.0, 4.0}, 1.0);
    const Tensor batch({2, 2}, {0.0, 0.0, -5.0, 2.5});
    const Tensor g = grad_input(m, batch);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(g.at(i, 0) == 3.0);
        CHECK(g.at(i, 1) == 4.0);
    }
}

TEST_CASE("grad_input: softplus single unit at zero") {
    // f(x) = softplus(w.x), w = (1,0): gradient at the origin is sigmoid(0)*w
    EnergyModel m(2, {1}, Activation::softplus);
    m.layer(0).weight.at(0, 0) = 1.0;
    m.layer(0).weight.at(0, 1) = 0.0;
    m.layer(1).weight.at(0, 0) = 1.0;
    const Tensor batch({1, 2}, {0.0, 0.0});
    const Tensor g = grad_input(m, batch);
    CHECK(g.at(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(g.at(0, 1) == 0.0);
}

TEST_CASE("grad_input matches finite differences on random nets") {
    RngStream rng(11);
    for (Activation act : {Activation::softplus, Activation::swish, Activation::tanh}) {
        const EnergyModel m = EnergyModel::random(2, {12, 8}, act, rng);
        Tensor batch({4, 2});
        for (double& v : batch.values()) v = rng.normal();
        const Tensor g = grad_input(m, batch);
        for (std::size_t i = 0; i < 4; ++i) {
            const auto fn = [&](std::span<const double> x) {
                return energy_forward_one(m, x);
            };
            const std::vector<double> fd = finite_diff_gradient(fn, batch.row(i), 1e-5);
            for (std::size_t j = 0; j < 2; ++j) {
                CHECK(std::abs(g.at(i, j) - fd[j]) < 1e-6);
            }
        }
    }
}

TEST_CASE("grad_params: linearity and zero weights") {
    RngStream rng(3);
    const EnergyModel m = EnergyModel::random(2, {8}, Activation::softplus, rng);
    Tensor batch({3, 2});
    for (double& v : batch.values()) v = rng.normal();

    SUBCASE("all-zero out_weights give the zero vector") {
        const std::vector<double> zeros(3, 0.0);
        for (double v : grad_params(m, batch, zeros).values) CHECK(v == 0.0);
    }
    SUBCASE("opposite weights cancel") {
        const Tensor one({1, 2}, {0.4, -0.2});
        const std::vector<double> plus{1.0}, minus{-1.0};
        ParamVector sum = grad_params(m, one, plus);
        sum += grad_params(m, one, minus);
        for (double v : sum.values) CHECK(v == 0.0);
    }
    SUBCASE("linear combination of weights") {
        std::vector<double> w1{0.5, -1.0, 2.0}, w2{1.5, 0.25, -0.75};
        const double alpha = 0.3, beta = -1.7;
        std::vector<double> combo(3);
        for (int i = 0; i < 3; ++i) combo[i] = alpha * w1[i] + beta * w2[i];
        ParamVector expect = grad_params(m, batch, w1);
        expect *= alpha;
        ParamVector g2 = grad_params(m, batch, w2);
        g2 *= beta;
        expect += g2;
        const ParamVector got = grad_params(m, batch, combo);
        CHECK(vec_rel_err(got.values, expect.values) < 1e-12);
    }
}

TEST_CASE("grad_params matches finite differences over parameters") {
    RngStream rng(5);
    for (Activation act : {Activation::softplus, Activation::swish, Activation::tanh}) {
        const EnergyModel m = EnergyModel::random(3, {10, 6}, act, rng);
        Tensor batch({4, 3});
        for (double& v : batch.values()) v = rng.normal();
        std::vector<double> weights{0.7, -0.3, 1.1, 0.2};

        const ParamVector analytic = grad_params(m, batch, weights);
        const ParamVector theta = m.params();
        const auto fn = [&](std::span<const double> flat) {
            EnergyModel probe = m;
            ParamVector p;
            p.values.assign(flat.begin(), flat.end());
            probe.set_params(p);
            const Tensor f = energy_forward(probe, batch);
            double total = 0.0;
            for (std::size_t i = 0; i < 4; ++i) total += weights[i] * f.values()[i];
            return total;
        };
        const std::vector<double> fd = finite_diff_gradient(fn, theta.values, 1e-5);
        CHECK(vec_rel_err(analytic.values, fd) < 1e-5);
    }
}

TEST_CASE("input-grad-norm: linear closed form") {
    const EnergyModel m = linear_model({3.0, 4.0}, -2.0);
    const Tensor batch({2, 2}, {1.0, 1.0, -3.0, 0.5});
    const InputGradNormResult r = grad_params_of_input_grad_norm(m, batch);
    CHECK(r.value == doctest::Approx(25.0).epsilon(1e-15));
    CHECK(r.grad.values[0] == doctest::Approx(6.0).epsilon(1e-15));  // 2w
    CHECK(r.grad.values[1] == doctest::Approx(8.0).epsilon(1e-15));
    CHECK(r.grad.values[2] == 0.0);  // bias
}

TEST_CASE("input-grad-norm scalar equals mean squared grad_input rows") {
    RngStream rng(9);
    const EnergyModel m = EnergyModel::random(2, {14, 10}, Activation::softplus, rng);
    Tensor batch({6, 2});
    for (double& v : batch.values()) v = rng.normal();
    const InputGradNormResult r = grad_params_of_input_grad_norm(m, batch);
    const Tensor g = grad_input(m, batch);
    double mean = 0.0;
    for (std::size_t i = 0; i < 6; ++i) mean += squared_norm(g.row(i)) / 6.0;
    CHECK(std::abs(r.value - mean) < 1e-12 * std::max(1.0, std::abs(mean)));
}

TEST_CASE("input-grad-norm parameter gradient matches finite differences") {
    RngStream rng(13);
    for (Activation act : {Activation::softplus, Activation::swish, Activation::tanh}) {
        for (const std::vector<std::size_t>& hidden :
             {std::vector<std::size_t>{}, {6}, {8, 6}, {8, 8, 4}}) {
            const EnergyModel m = EnergyModel::random(2, hidden, act, rng);
            Tensor batch({3, 2});
            for (double& v : batch.values()) v = rng.normal();
            const InputGradNormResult r = grad_params_of_input_grad_norm(m, batch);
            const ParamVector theta = m.params();
            const auto fn = [&](std::span<const double> flat) {
                EnergyModel probe = m;
                ParamVector p;
                p.values.assign(flat.begin(), flat.end());
                probe.set_params(p);
                const Tensor g = grad_input(probe, batch);
                double total = 0.0;
                for (std::size_t i = 0; i < 3; ++i) total += squared_norm(g.row(i));
                return total / 3.0;
            };
            const std::vector<double> fd = finite_diff_gradient(fn, theta.values, 1e-4);
            CHECK(vec_rel_err(r.grad.values, fd) < 1e-4);
        }
    }
}

TEST_CASE("ParamVector canonical order round-trips through set_params") {
    RngStream rng(21);
    EnergyModel m = EnergyModel::random(2, {4, 3}, Activation::tanh, rng);
    const ParamVector p = m.params();
    CHECK(p.size() == m.param_count());
    CHECK(p.size() == (2 * 4 + 4) + (4 * 3 + 3) + (3 * 1 + 1));
    // layer-major, weights before biases, row-major inside the matrix
    CHECK(p.values[0] == m.layer(0).weight.at(0, 0));
    CHECK(p.values[1] == m.layer(0).weight.at(0, 1));
    CHECK(p.values[2 * 4] == m.layer(0).bias.at(0));

    EnergyModel other(2, {4, 3}, Activation::tanh);
    other.set_params(p);
    const Tensor probe({1, 2}, {0.3, -0.9});
    CHECK(energy_forward(other, probe).values()[0] ==
          energy_forward(m, probe).values()[0]);
}

TEST_CASE("checkpoint round trip") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "ebmlab_ckpt_test";
    fs::create_directories(dir);
    RngStream rng(33);
    const EnergyModel m = EnergyModel::random(2, {8, 8}, Activation::swish, rng);

    SUBCASE("save -> load -> save produces identical bytes") {
        const fs::path p1 = dir / "a.ckpt", p2 = dir / "b.ckpt";
        save_checkpoint(m, p1);
        const EnergyModel loaded = load_checkpoint(p1);
        save_checkpoint(loaded, p2);
        std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
        const std::string b1((std::istreambuf_iterator<char>(f1)), {});
        const std::string b2((std::istreambuf_iterator<char>(f2)), {});
        CHECK(b1 == b2);
        CHECK_FALSE(b1.empty());
    }
    SUBCASE("energies identical before and after the round trip") {
        const fs::path p = dir / "c.ckpt";
        save_checkpoint(m, p);
        const EnergyModel loaded = load_checkpoint(p);
        RngStream xr(5);
        Tensor batch({10, 2});
        for (double& v : batch.values()) v = xr.normal();
        const Tensor before = energy_forward(m, batch);
        const Tensor after = energy_forward(loaded, batch);
        for (std::size_t i = 0; i < 10; ++i) {
            CHECK(before.values()[i] == after.values()[i]);
        }
    }
    SUBCASE("corrupted header and truncation are rejected") {
        const fs::path p = dir / "d.ckpt";
        save_checkpoint(m, p);
        {
            std::fstream f(p, std::ios::binary | std::ios::in | std::ios::out);
            f.seekp(0);
            f.write("XY", 2);
        }
        CHECK_THROWS_AS(load_checkpoint(p), IoError);

        const fs::path t = dir / "e.ckpt";
        save_checkpoint(m, t);
        fs::resize_file(t, fs::file_size(t) / 2);
        CHECK_THROWS_AS(load_checkpoint(t), IoError);
    }
}

TEST_CASE("random init: biases zero, weight scale follows fan-in") {
    RngStream rng(55);
    const EnergyModel m = EnergyModel::random(2, {256}, Activation::softplus, rng);
    for (double b : m.layer(0).bias.values()) CHECK(b == 0.0);
    double var = 0.0;
    for (double w : m.layer(0).weight.values()) var += w * w;
    var /= static_cast<double>(m.layer(0).weight.size());
    CHECK(var == doctest::Approx(1.0).epsilon(0.25));  // 2/fan_in with fan_in=2
}
