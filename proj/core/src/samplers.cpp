#include "ebmlab/samplers.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "ebmlab/error.hpp"
#include "ebmlab/numerics.hpp"

namespace ebmlab {

namespace {

// Batched energy/gradient provider; lets one PGD loop serve a single model,
// its negation, and weighted compositions.
struct EnergyView {
    virtual ~EnergyView() = default;
    virtual BatchEval eval(const Tensor& batch) const = 0;
};

struct SignedModelView final : EnergyView {
    const EnergyModel* model = nullptr;
    double sign = 1.0;

    BatchEval eval(const Tensor& batch) const override {
        BatchEval ev = evaluate_with_grad(*model, batch);
        if (sign != 1.0) {
            for (double& v : ev.energy.values()) v *= sign;
            for (double& v : ev.grad.values()) v *= sign;
        }
        return ev;
    }
};

struct CompositeView final : EnergyView {
    std::span<const std::pair<const EnergyModel*, double>> models;


    BatchEval eval(const Tensor& batch) const override {
        BatchEval total{Tensor({batch.rows()}), Tensor({batch.rows(), batch.cols()})};
        for (const auto& [model, weight] : models) {
            BatchEval ev = evaluate_with_grad(*model, batch);
            for (std::size_t i = 0; i < ev.energy.size(); ++i) {
                total.energy.values()[i] += weight * ev.energy.values()[i];
            }
            for (std::size_t i = 0; i < ev.grad.size(); ++i) {
                total.grad.values()[i] += weight * ev.grad.values()[i];
            }
        }
        return total;
    }
};

void record_step(Trajectory& traj, std::size_t step, const Tensor& points,
                 const Tensor& energies) {
    for (std::size_t i = 0; i < points.rows(); ++i) {
        const std::span<const double> row = points.row(i);
        traj.rows.push_back(TrajectoryRow{
            step, i, std::vector<double>(row.begin(), row.end()),
            energies.values()[i]});
    }
}

PgdResult run_pgd(const EnergyView& view, const Batch& start,
                  const AttackConfig& cfg, const Tensor* centers = nullptr) {
    validate(cfg);
    start.points.require_finite("pgd start");
    if (centers != nullptr &&
        (centers->rank() != 2 || centers->rows() != start.points.rows() ||
         centers->cols() != start.points.cols())) {
        throw DimensionError("pgd: centers shape must match start batch");
    }
    const std::size_t n = start.points.rows();
    const std::size_t d = start.points.cols();

    PgdResult result;
    result.batch = Batch{start.points, SourceTag::perturbed};
    result.steps_taken.assign(n, 0);
    if (cfg.record_trajectory) result.trajectory.emplace();

    Tensor& x = result.batch.points;
    auto eval_at = [&](std::size_t step) {
        try {
            return view.eval(x);
        } catch (const NonFiniteError& e) {
            throw NonFiniteError("pgd: non-finite energy at step " +
                                 std::to_string(step) + " (" + e.what() + ")");
        }
    };

    if (cfg.record_trajectory) {
        record_step(*result.trajectory, 0, x, eval_at(0).energy);
    }

    for (std::size_t step = 1; step <= cfg.steps; ++step) {
        const BatchEval ev = eval_at(step);
        for (std::size_t i = 0; i < n; ++i) {
            const std::span<const double> g = ev.grad.row(i);
            const double g_norm = norm(g);
            std::span<double> xi = x.row(i);
            if (g_norm >= cfg.zero_grad_tol) {
                const double scale = cfg.step_size / g_norm;
                for (std::size_t j = 0; j < d; ++j) xi[j] += scale * g[j];
                ++result.steps_taken[i];
            }
            if (cfg.ball_radius) {
                const std::span<const double> center =
                    centers != nullptr ? centers->row(i) : start.points.row(i);
                project_ball(xi, center, *cfg.ball_radius);
            }
            if (cfg.clamp_bounds) cfg.clamp_bounds->clamp(xi);
        }
        if (cfg.record_trajectory) {
            record_step(*result.trajectory, step, x, eval_at(step).energy);
        }
    }
    x.require_finite("pgd result");
    return result;
}

}  // namespace

void validate(const AttackConfig& cfg) {
    if (!(cfg.step_size > 0.0)) throw ConfigError("AttackConfig: step_size must be positive");
    if (!(cfg.zero_grad_tol > 0.0)) {
        throw ConfigError("AttackConfig: zero_grad_tol must be positive");
    }
    if (cfg.ball_radius && !(*cfg.ball_radius > 0.0)) {
        throw ConfigError("AttackConfig: ball_radius must be positive");
    }
}

void validate(const SgldConfig& cfg) {
    if (!(cfg.step_size > 0.0)) throw ConfigError("SgldConfig: step_size must be positive");
    if (cfg.steps < 1) throw ConfigError("SgldConfig: steps must be at least 1");
    if (cfg.noise_variance && !(*cfg.noise_variance >= 0.0)) {
        throw ConfigError("SgldConfig: noise_variance must be non-negative");
    }
}

void project_ball(std::span<double> x, std::span<const double> center,
                  double radius) {
    if (!(radius > 0.0)) throw ConfigError("project_ball: radius must be positive");
    if (x.size() != center.size()) {
        throw DimensionError("project_ball: dimension mismatch");
    }
    // Radial scaling can land 1 ulp outside after rounding; repeat until the
    // result verifiably satisfies the constraint so projection is a fixed
    // point of itself. A rounding fixpoint just outside the sphere is pulled
    // one ulp toward the center to guarantee progress.
    for (;;) {
        double dist_sq = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double dj = x[j] - center[j];
            dist_sq += dj * dj;
        }
        if (dist_sq <= radius * radius) return;
        const double scale = radius / std::sqrt(dist_sq);
        bool changed = false;
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double next = center[j] + scale * (x[j] - center[j]);
            changed = changed || next != x[j];
            x[j] = next;
        }
        if (!changed) {
            for (std::size_t j = 0; j < x.size(); ++j) {
                x[j] = std::nextafter(x[j], center[j]);
            }
        }
    }
}

PgdResult pgd_ascend(const EnergyModel& model, const Batch& start,
                     const AttackConfig& cfg, RngStream&) {
    SignedModelView view;
    view.model = &model;
    view.sign = 1.0;
    return run_pgd(view, start, cfg);
}

PgdResult pgd_descend(const EnergyModel& model, const Batch& start,
                      const AttackConfig& cfg, RngStream&) {
    SignedModelView view;
    view.model = &model;
    view.sign = -1.0;
    return run_pgd(view, start, cfg);
}

PgdResult pgd_ascend_centered(const EnergyModel& model, const Batch& start,
                              const Tensor& centers, const AttackConfig& cfg,
                              RngStream&) {
    if (!cfg.ball_radius) {
        throw ConfigError("pgd_ascend_centered: attack needs a ball_radius");
    }
    SignedModelView view;
    view.model = &model;
    view.sign = 1.0;
    return run_pgd(view, start, cfg, &centers);
}

PgdResult compose_and_ascend(
    std::span<const std::pair<const EnergyModel*, double>> models,
    const Batch& start, const AttackConfig& cfg, RngStream&) {
    if (models.empty()) throw ConfigError("compose_and_ascend: needs at least one model");
    const std::size_t dim = models.front().first->input_dim();
    for (const auto& [model, weight] : models) {
        if (model->input_dim() != dim) {
            throw DimensionError("compose_and_ascend: models disagree on input_dim");
        }
        if (!std::isfinite(weight)) {
            throw NonFiniteError("compose_and_ascend: non-finite weight");
        }
    }
    CompositeView view;
    view.models = models;
    return run_pgd(view, start, cfg);
}

Batch sgld_chain(const EnergyModel& model, const Batch& start,
                 const SgldConfig& cfg, RngStream& rng) {
    validate(cfg);
    start.points.require_finite("sgld start");
    const std::size_t n = start.points.rows();
    const std::size_t d = start.points.cols();
    const double noise_var = cfg.noise_variance.value_or(cfg.step_size);
    const double noise_std = std::sqrt(noise_var);

    Batch out{start.points, SourceTag::generated};
    // One child stream per call, then per-point substreams keyed by index so
    // the chain for a point does not depend on batch order.
    const RngStream call_stream = rng.fork("sgld");

    for (std::size_t i = 0; i < n; ++i) {
        RngStream point_rng(derive_seed(call_stream.seed(), "point", i));
        std::span<double> xi = out.points.row(i);
        Tensor x_row({1, d}, std::vector<double>(xi.begin(), xi.end()));
        for (std::size_t step = 1; step <= cfg.steps; ++step) {
            BatchEval ev;
            try {
                ev = evaluate_with_grad(model, x_row);
            } catch (const NonFiniteError& e) {
                throw NonFiniteError("sgld_chain: non-finite energy at step " +
                                     std::to_string(step) + " (" + e.what() + ")");
            }
            const std::span<const double> g = ev.grad.row(0);
            std::span<double> xr = x_row.row(0);
            for (std::size_t j = 0; j < d; ++j) {
                xr[j] += 0.5 * cfg.step_size * g[j] + point_rng.normal(0.0, noise_std);
            }
        }
        const std::span<const double> xr = x_row.row(0);
        for (std::size_t j = 0; j < d; ++j) xi[j] = xr[j];
    }
    out.points.require_finite("sgld result");
    return out;
}

PgdResult interpolate_then_ascend(const EnergyModel& model,
                                  std::span<const double> xa,
                                  std::span<const double> xb,
                                  std::size_t n_points, const AttackConfig& cfg,
                                  RngStream& rng) {
    if (n_points < 2) throw ConfigError("interpolate_then_ascend: n_points must be >= 2");
    if (xa.size() != xb.size()) {
        throw DimensionError("interpolate_then_ascend: endpoint dimension mismatch");
    }
    const std::size_t d = xa.size();
    Tensor grid({n_points, d});
    const std::vector<double> ts = linspace(0.0, 1.0, n_points);
    for (std::size_t i = 0; i < n_points; ++i) {
        std::span<double> row = grid.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            row[j] = (1.0 - ts[i]) * xa[j] + ts[i] * xb[j];
        }
    }
    return pgd_ascend(model, Batch{std::move(grid), SourceTag::p0}, cfg, rng);
}

double PgdResult::mean_displacement(const Batch& start) const {
    const std::size_t n = batch.points.rows();
    if (n == 0 || start.points.rows() != n) {
        throw DimensionError("mean_displacement: batch size mismatch");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::span<const double> a = start.points.row(i);
        const std::span<const double> b = batch.points.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < a.size(); ++j) {
            const double dj = b[j] - a[j];
            s += dj * dj;
        }
        total += std::sqrt(s);
    }
    return total / static_cast<double>(n);
}

void Trajectory::write_tsv(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("Trajectory::write_tsv: cannot open " + path.string());
    const std::size_t d = rows.empty() ? 0 : rows.front().coords.size();
    out << "step\tpoint";
    for (std::size_t j = 0; j < d; ++j) out << "\tx" << j;
    out << "\tenergy\n";
    char buf[64];
    for (const TrajectoryRow& r : rows) {
        out << r.step << '\t' << r.point_index;
        for (double c : r.coords) {
            std::snprintf(buf, sizeof(buf), "%.17g", c);
            out << '\t' << buf;
        }
        std::snprintf(buf, sizeof(buf), "%.17g", r.energy);
        out << '\t' << buf << '\n';
    }
    if (!out) throw IoError("Trajectory::write_tsv: write failed");
}

Batch Trajectory::step_batch(std::size_t step, std::size_t dim, SourceTag tag) const {
    std::vector<double> flat;
    for (const TrajectoryRow& r : rows) {
        if (r.step == step) flat.insert(flat.end(), r.coords.begin(), r.coords.end());
    }
    const std::size_t n = dim == 0 ? 0 : flat.size() / dim;
    return Batch{Tensor({n, dim}, std::move(flat)), tag};
}

}  // namespace ebmlab
