#include <doctest.h>

#include <cmath>

#include "ebmlab/error.hpp"
#include "ebmlab/numerics.hpp"
#include "ebmlab/objectives.hpp"
#include "ebmlab/rng.hpp"

using namespace ebmlab;

namespace {

double vec_rel_err(std::span<const double> a, std::span<const double> b) {
    double diff = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-300});
}

Batch random_batch(RngStream& rng, std::size_t n, std::size_t d, SourceTag tag) {
    Tensor pts({n, d});
    for (double& v : pts.values()) v = rng.normal(0.0, 1.5);
    return Batch{std::move(pts), tag};
}

EnergyModel constant_model(std::size_t d, double bias) {
    EnergyModel m(d, {}, Activation::tanh);  // zero weights
    m.layer(0).bias.at(0) = bias;
    return m;
}

}  // namespace

TEST_CASE("at_loss: constant discriminator values") {
    RngStream rng(1);
    const Batch real = random_batch(rng, 7, 2, SourceTag::real);
    const Batch fake = random_batch(rng, 5, 2, SourceTag::perturbed);

    SUBCASE("f = 0 achieves -log 4 exactly") {
        const EnergyModel m = constant_model(2, 0.0);
        const LossReport r = at_loss(m, real, fake);
        CHECK(std::abs(r.value - (-std::log(4.0))) < 1e-12);
        CHECK(r.value == doctest::Approx(r.real_term + r.fake_term).epsilon(1e-15));
        CHECK(r.aux.at("mean_sigmoid_real") == doctest::Approx(0.5));
    }
    SUBCASE("f = +20 saturates per the softplus asymptotics") {
        const EnergyModel m = constant_model(2, 20.0);
        const LossReport r = at_loss(m, real, fake);
        // log sigmoid(20) = -softplus(-20) ~ -2.061e-9
        CHECK(r.real_term == doctest::Approx(-2.0611536e-9).epsilon(1e-4));
        CHECK(r.fake_term == doctest::Approx(-20.0).epsilon(1e-9));
    }
    SUBCASE("empty batches are rejected") {
        const EnergyModel m = constant_model(2, 0.0);
        Batch empty{Tensor({std::size_t{0}, std::size_t{2}}), SourceTag::real};
        CHECK_THROWS_AS(at_loss(m, empty, fake), DimensionError);
    }
}

TEST_CASE("at_grad_closed equals the reverse-mode gradient of at_loss") {
    RngStream rng(2);
    for (int trial = 0; trial < 25; ++trial) {
        RngStream t = rng.fork("trial");
        const EnergyModel m = EnergyModel::random(2, {10, 8}, Activation::softplus, t);
        const Batch real = random_batch(t, 6, 2, SourceTag::real);
        const Batch fake = random_batch(t, 4, 2, SourceTag::perturbed);
        const LossReport loss = at_loss(m, real, fake);
        const ParamVector closed = at_grad_closed(m, real, fake);
        CHECK(vec_rel_err(loss.grad.values, closed.values) < 1e-10);
    }
}

TEST_CASE("at_loss gradient matches finite differences") {
    RngStream rng(3);
    const EnergyModel m = EnergyModel::random(2, {8, 6}, Activation::swish, rng);
    const Batch real = random_batch(rng, 5, 2, SourceTag::real);
    const Batch fake = random_batch(rng, 5, 2, SourceTag::perturbed);
    const LossReport loss = at_loss(m, real, fake);
    const ParamVector theta = m.params();
    const auto fn = [&](std::span<const double> flat) {
        EnergyModel probe = m;
        ParamVector p;
        p.values.assign(flat.begin(), flat.end());
        probe.set_params(p);
        return at_loss(probe, real, fake).value;
    };
    const std::vector<double> fd = finite_diff_gradient(fn, theta.values, 1e-5);
    CHECK(vec_rel_err(loss.grad.values, fd) < 1e-5);
}

TEST_CASE("at_grad_closed: sigmoid-scaled single-sample forms") {
    RngStream rng(4);
    const EnergyModel m = EnergyModel::random(2, {6}, Activation::softplus, rng);

    SUBCASE("single real sample with f = 0 contributes half the raw gradient") {
        // find f(x) = 0 is not needed: use a zero-weight model where f = 0
        const EnergyModel z = constant_model(2, 0.0);
        const Batch x = random_batch(rng, 1, 2, SourceTag::real);
        const ParamVector g = at_grad_closed(z, x, x);
        // real weight (1 - s(0)) = 0.5, fake weight -s(0) = -0.5: cancel
        for (double v : g.values) CHECK(v == doctest::Approx(0.0).epsilon(1e-15));
    }
    SUBCASE("identical batches under f = 0 give the vanishing gradient") {
        const EnergyModel z = constant_model(2, 0.0);
        const Batch x = random_batch(rng, 6, 2, SourceTag::real);
        const ParamVector g = at_grad_closed(z, x, x);
        for (double v : g.values) CHECK(std::abs(v) < 1e-15);
    }
    SUBCASE("per-sample scaling factors lie in [0,1] relative to the raw terms") {
        const Batch real = random_batch(rng, 1, 2, SourceTag::real);
        const Batch fake = random_batch(rng, 1, 2, SourceTag::perturbed);
        // per-sample: scaled = (1 - s(f)) * raw for real, s(f) * raw for fake
        const double f_real = energy_forward(m, real.points).values()[0];
        const std::vector<double> one{1.0};
        const ParamVector raw_real = grad_params(m, real.points, one);
        const std::vector<double> w{1.0 - sigmoid(f_real)};
        const ParamVector scaled_real = grad_params(m, real.points, w);
        for (std::size_t i = 0; i < raw_real.size(); ++i) {
            CHECK(std::abs(scaled_real[i]) <= std::abs(raw_real[i]) + 1e-15);
        }
        const double f_fake = energy_forward(m, fake.points).values()[0];
        const ParamVector raw_fake = grad_params(m, fake.points, one);
        const std::vector<double> wf{sigmoid(f_fake)};
        const ParamVector scaled_fake = grad_params(m, fake.points, wf);
        for (std::size_t i = 0; i < raw_fake.size(); ++i) {
            CHECK(std::abs(scaled_fake[i]) <= std::abs(raw_fake[i]) + 1e-15);
        }
    }
}

TEST_CASE("ebm_mle_grad") {
    RngStream rng(5);
    SUBCASE("identical batches cancel to the zero gradient") {
        const EnergyModel m = EnergyModel::random(2, {8}, Activation::softplus, rng);
        const Batch x = random_batch(rng, 6, 2, SourceTag::real);
        const LossReport r = ebm_mle_grad(m, x, x);
        for (double v : r.grad.values) CHECK(std::abs(v) < 1e-14);
        CHECK(r.aux.at("gap") == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("linear model on unit points") {
        EnergyModel m(2, {}, Activation::tanh);
        m.layer(0).weight.at(0, 0) = 0.3;
        m.layer(0).weight.at(0, 1) = -0.2;
        const Batch real{Tensor({1, 2}, {1.0, 0.0}), SourceTag::real};
        const Batch fake{Tensor({1, 2}, {0.0, 1.0}), SourceTag::perturbed};
        const LossReport r = ebm_mle_grad(m, real, fake);
        CHECK(r.grad.values[0] == doctest::Approx(1.0));   // dw0
        CHECK(r.grad.values[1] == doctest::Approx(-1.0));  // dw1
        CHECK(r.grad.values[2] == doctest::Approx(0.0));   // bias cancels
    }
    SUBCASE("per-sample relation to the sigmoid-scaled gradient") {
        const EnergyModel m = EnergyModel::random(2, {6, 4}, Activation::tanh, rng);
        const Batch real = random_batch(rng, 1, 2, SourceTag::real);
        const Batch fake = random_batch(rng, 1, 2, SourceTag::perturbed);
        const double fr = energy_forward(m, real.points).values()[0];
        const double ff = energy_forward(m, fake.points).values()[0];
        const LossReport mle = ebm_mle_grad(m, real, fake);
        const ParamVector at = at_grad_closed(m, real, fake);
        // reconstruct the scaled gradient from the raw per-sample terms
        const std::vector<double> one{1.0};
        ParamVector expect = grad_params(m, real.points, one);
        expect *= (1.0 - sigmoid(fr));
        ParamVector fake_term = grad_params(m, fake.points, one);
        fake_term *= sigmoid(ff);
        expect -= fake_term;
        CHECK(vec_rel_err(expect.values, at.values) < 1e-12);
        CHECK(mle.value == doctest::Approx(fr - ff).epsilon(1e-12));
    }
}

TEST_CASE("constant-discriminator payoff: maximum at one half") {
    // log c + log(1-c) maximized over a fine grid that contains 0.5
    double best_c = 0.0, best_v = -1e300;
    for (int i = 1; i < 2000; ++i) {
        const double c = static_cast<double>(i) / 2000.0;
        const double v = std::log(c) + std::log(1.0 - c);
        if (v > best_v) {
            best_v = v;
            best_c = c;
        }
    }
    CHECK(best_c == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(best_v == doctest::Approx(-std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("r1_term") {
    RngStream rng(6);
    SUBCASE("gamma = 0 short-circuits to zeros") {
        const EnergyModel m = EnergyModel::random(2, {6}, Activation::softplus, rng);
        const Batch real = random_batch(rng, 4, 2, SourceTag::real);
        const R1Result r = r1_term(m, real, 0.0);
        CHECK(r.penalty == 0.0);
        for (double v : r.grad.values) CHECK(v == 0.0);
    }
    SUBCASE("linear closed form with gamma = 2") {
        EnergyModel m(2, {}, Activation::tanh);
        m.layer(0).weight.at(0, 0) = 3.0;
        m.layer(0).weight.at(0, 1) = 4.0;
        const Batch real = random_batch(rng, 3, 2, SourceTag::real);
        const R1Result r = r1_term(m, real, 2.0);
        CHECK(r.penalty == doctest::Approx(25.0).epsilon(1e-14));
        CHECK(r.grad.values[0] == doctest::Approx(6.0).epsilon(1e-14));
        CHECK(r.grad.values[1] == doctest::Approx(8.0).epsilon(1e-14));
        CHECK(r.grad.values[2] == 0.0);
    }
    SUBCASE("gradient matches finite differences of the penalty") {
        const EnergyModel m = EnergyModel::random(2, {8, 6}, Activation::softplus, rng);
        const Batch real = random_batch(rng, 4, 2, SourceTag::real);
        const double gamma = 0.7;
        const R1Result r = r1_term(m, real, gamma);
        const ParamVector theta = m.params();
        const auto fn = [&](std::span<const double> flat) {
            EnergyModel probe = m;
            ParamVector p;
            p.values.assign(flat.begin(), flat.end());
            probe.set_params(p);
            return r1_term(probe, real, gamma).penalty;
        };
        const std::vector<double> fd = finite_diff_gradient(fn, theta.values, 1e-4);
        CHECK(vec_rel_err(r.grad.values, fd) < 1e-4);
    }
    SUBCASE("negative gamma is rejected") {
        const EnergyModel m = constant_model(2, 0.0);
        const Batch real = random_batch(rng, 2, 2, SourceTag::real);
        CHECK_THROWS_AS(r1_term(m, real, -0.1), ConfigError);
    }
}
