#include "ebmlab/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ebmlab/error.hpp"
#include "ebmlab/numerics.hpp"

namespace ebmlab {

void validate(const GridSpec& grid) {
    if (grid.resolution < 2) throw ConfigError("GridSpec: resolution must be >= 2");
    if (grid.bounds.dim() != 2) throw ConfigError("GridSpec: bounds must be 2D");
    for (std::size_t j = 0; j < 2; ++j) {
        if (!(grid.bounds.lo[j] < grid.bounds.hi[j])) {
            throw ConfigError("GridSpec: bounds are degenerate");
        }
    }
}

std::vector<double> grid_axis(const GridSpec& grid, std::size_t axis) {
    validate(grid);
    if (axis > 1) throw ConfigError("grid_axis: axis must be 0 or 1");
    return linspace(grid.bounds.lo[axis], grid.bounds.hi[axis], grid.resolution);
}

namespace {

// f on every grid point, row-major with y (axis 1) as the slow index.
Tensor grid_energies(const EnergyModel& model, const GridSpec& grid) {
    const std::vector<double> xs = grid_axis(grid, 0);
    const std::vector<double> ys = grid_axis(grid, 1);
    const std::size_t res = grid.resolution;
    Tensor points({res * res, 2});
    for (std::size_t iy = 0; iy < res; ++iy) {
        for (std::size_t ix = 0; ix < res; ++ix) {
            std::span<double> row = points.row(iy * res + ix);
            row[0] = xs[ix];
            row[1] = ys[iy];
        }
    }
    return energy_forward(model, points);
}

}  // namespace

SupportProbeReport support_probe(const EnergyModel& model,
                                 const DistributionSpec& p_data,
                                 const GridSpec& grid, double mass_level) {
    validate(grid);
    if (model.input_dim() != 2 || p_data.dim() != 2) {
        throw DimensionError("support_probe: 2D models and specs only");
    }
    const SupportRegion region = support_region(p_data, mass_level);
    const std::vector<double> xs = grid_axis(grid, 0);
    const std::vector<double> ys = grid_axis(grid, 1);
    const Tensor f = grid_energies(model, grid);

    SupportProbeReport report;
    std::size_t off_leq_half = 0;
    for (std::size_t iy = 0; iy < grid.resolution; ++iy) {
        for (std::size_t ix = 0; ix < grid.resolution; ++ix) {
            const double point[2] = {xs[ix], ys[iy]};
            const double d = sigmoid(f.values()[iy * grid.resolution + ix]);
            if (region.contains(point)) {
                report.mean_abs_dev_on_support += std::abs(d - 0.5);
                ++report.on_count;
            } else {
                report.max_d_off_support = std::max(report.max_d_off_support, d);
                if (d <= 0.5) ++off_leq_half;
                ++report.off_count;
            }
        }
    }
    if (report.on_count > 0) {
        report.mean_abs_dev_on_support /= static_cast<double>(report.on_count);
    }
    if (report.off_count > 0) {
        report.fraction_off_support_leq_half =
            static_cast<double>(off_leq_half) / static_cast<double>(report.off_count);
    }
    return report;
}

MaximaCensus local_maxima_census(const EnergyModel& model, const GridSpec& grid,
                                 double margin, const SupportRegion* region) {
    validate(grid);
    if (!(margin > 0.0)) throw ConfigError("local_maxima_census: margin must be positive");
    const std::vector<double> xs = grid_axis(grid, 0);
    const std::vector<double> ys = grid_axis(grid, 1);
    const std::size_t res = grid.resolution;
    const Tensor f = grid_energies(model, grid);
    const auto value = [&](std::size_t ix, std::size_t iy) {
        return f.values()[iy * res + ix];
    };

    // Boundary points are compared against the neighbors they have (5 on an
    // edge, 3 in a corner): unsuppressed maxima of a model trained with a
    // concentrated source often sit on the domain edge, and an interior-only
    // census would miss exactly those.
    MaximaCensus census;
    for (std::size_t iy = 0; iy < res; ++iy) {
        for (std::size_t ix = 0; ix < res; ++ix) {
            const double center = value(ix, iy);
            bool is_max = true;
            for (int dy = -1; dy <= 1 && is_max; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const std::ptrdiff_t nx = static_cast<std::ptrdiff_t>(ix) + dx;
                    const std::ptrdiff_t ny = static_cast<std::ptrdiff_t>(iy) + dy;
                    if (nx < 0 || ny < 0 || nx >= static_cast<std::ptrdiff_t>(res) ||
                        ny >= static_cast<std::ptrdiff_t>(res)) {
                        continue;
                    }
                    if (center - value(static_cast<std::size_t>(nx),
                                       static_cast<std::size_t>(ny)) < margin) {
                        is_max = false;
                        break;
                    }
                }
            }
            if (!is_max) continue;
            const std::array<double, 2> where{xs[ix], ys[iy]};
            census.all.push_back(where);
            if (region != nullptr && !region->contains(where)) {
                census.off_support.push_back(where);
            }
        }
    }
    return census;
}

namespace {

double kernel_sum(std::span<const double> x, std::span<const double> y,
                  std::span<const double> bandwidths) {
    double dist_sq = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double dj = x[j] - y[j];
        dist_sq += dj * dj;
    }
    double k = 0.0;
    for (double b : bandwidths) {
        k += std::exp(-dist_sq / (2.0 * b * b));
    }
    return k;
}

double mmd2_impl(const Tensor& a, const Tensor& b, std::span<const double> bw) {
    const std::size_t m = a.rows(), n = b.rows();
    double kaa = 0.0, kbb = 0.0, kab = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            if (i == j) continue;
            kaa += kernel_sum(a.row(i), a.row(j), bw);
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            kbb += kernel_sum(b.row(i), b.row(j), bw);
        }
    }
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            kab += kernel_sum(a.row(i), b.row(j), bw);
        }
    }
    const double md = static_cast<double>(m), nd = static_cast<double>(n);
    return kaa / (md * (md - 1.0)) + kbb / (nd * (nd - 1.0)) - 2.0 * kab / (md * nd);
}

}  // namespace

double mmd2(const Batch& a, const Batch& b, std::span<const double> bandwidths) {
    if (a.dim() != b.dim()) throw DimensionError("mmd2: dimension mismatch");
    if (a.size() < 2 || b.size() < 2) {
        throw DimensionError("mmd2: each batch needs at least 2 points");
    }
    if (bandwidths.empty()) throw ConfigError("mmd2: needs at least one bandwidth");
    for (double b_ : bandwidths) {
        if (!(b_ > 0.0)) throw ConfigError("mmd2: bandwidths must be positive");
    }
    return mmd2_impl(a.points, b.points, bandwidths);
}

std::vector<double> mmd2_permutation_null(const Batch& a, const Batch& b,
                                          std::span<const double> bandwidths,
                                          std::size_t permutations,
                                          RngStream& rng) {
    if (permutations == 0) throw ConfigError("mmd2_permutation_null: permutations must be >= 1");
    const std::size_t m = a.size(), n = b.size(), d = a.dim();
    Tensor pooled({m + n, d});
    for (std::size_t i = 0; i < m; ++i) {
        std::copy_n(a.points.row(i).data(), d, pooled.row(i).data());
    }
    for (std::size_t i = 0; i < n; ++i) {
        std::copy_n(b.points.row(i).data(), d, pooled.row(m + i).data());
    }

    std::vector<std::size_t> order(m + n);
    std::vector<double> null_values;
    null_values.reserve(permutations);
    Tensor pa({m, d}), pb({n, d});
    for (std::size_t p = 0; p < permutations; ++p) {
        std::iota(order.begin(), order.end(), 0);
        // Fisher-Yates on the library stream; std::shuffle is not seed-stable
        for (std::size_t i = m + n; i > 1; --i) {
            std::swap(order[i - 1], order[rng.index(i)]);
        }
        for (std::size_t i = 0; i < m; ++i) {
            std::copy_n(pooled.row(order[i]).data(), d, pa.row(i).data());
        }
        for (std::size_t i = 0; i < n; ++i) {
            std::copy_n(pooled.row(order[m + i]).data(), d, pb.row(i).data());
        }
        null_values.push_back(mmd2_impl(pa, pb, bandwidths));
    }
    return null_values;
}

double ood_auroc(std::span<const double> in_scores,
                 std::span<const double> out_scores) {
    if (in_scores.empty() || out_scores.empty()) {
        throw DimensionError("ood_auroc: score sets must be non-empty");
    }
    // midrank formulation of the Mann-Whitney statistic
    struct Entry {
        double score;
        bool is_in;
    };
    std::vector<Entry> entries;
    entries.reserve(in_scores.size() + out_scores.size());
    for (double s : in_scores) entries.push_back({s, true});
    for (double s : out_scores) entries.push_back({s, false});
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.score < b.score; });

    double rank_sum_in = 0.0;
    std::size_t i = 0;
    while (i < entries.size()) {
        std::size_t j = i;
        while (j < entries.size() && entries[j].score == entries[i].score) ++j;
        // ranks i+1 .. j share the midrank
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) {
            if (entries[k].is_in) rank_sum_in += midrank;
        }
        i = j;
    }
    const double n_in = static_cast<double>(in_scores.size());
    const double n_out = static_cast<double>(out_scores.size());
    const double u = rank_sum_in - n_in * (n_in + 1.0) / 2.0;
    return u / (n_in * n_out);
}

double ood_auroc(const EnergyModel& model, const Batch& in_batch,
                 const Batch& out_batch) {
    const Tensor f_in = energy_forward(model, in_batch.points);
    const Tensor f_out = energy_forward(model, out_batch.points);
    return ood_auroc(f_in.values(), f_out.values());
}

namespace {

// uniform point in the d-ball of given radius: gaussian direction, u^(1/d) radius
void uniform_in_ball(RngStream& rng, double radius, std::span<double> out) {
    double n_sq = 0.0;
    for (double& v : out) {
        v = rng.normal();
        n_sq += v * v;
    }
    const double n = std::sqrt(n_sq);
    const double r =
        radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(out.size()));
    const double scale = n > 0.0 ? r / n : 0.0;
    for (double& v : out) v *= scale;
}

}  // namespace

OodReport adversarial_ood_auroc(const EnergyModel& model, const Batch& in_batch,
                                const Batch& out_batch, const AttackConfig& attack,
                                std::size_t restarts, RngStream& rng) {
    if (restarts == 0) throw ConfigError("adversarial_ood_auroc: restarts must be >= 1");
    if (!attack.ball_radius) {
        throw ConfigError("adversarial_ood_auroc: attack needs a ball_radius");
    }
    validate(attack);

    OodReport report;
    report.attack = attack;
    report.restarts = restarts;
    report.clean_auroc = ood_auroc(model, in_batch, out_batch);

    const std::size_t n = out_batch.size();
    const std::size_t d = out_batch.dim();
    const double radius = *attack.ball_radius;

    // best score per OOD point; the unattacked point participates so the
    // adversary can only raise scores
    const Tensor clean_scores = energy_forward(model, out_batch.points);
    std::vector<double> best(clean_scores.values().begin(), clean_scores.values().end());

    std::vector<double> offset(d);
    for (std::size_t r = 0; r < restarts; ++r) {
        RngStream restart_rng = rng.fork("ood-restart");
        Tensor starts({n, d});
        for (std::size_t i = 0; i < n; ++i) {
            RngStream point_rng(derive_seed(restart_rng.seed(), "point", i));
            uniform_in_ball(point_rng, radius, offset);
            const std::span<const double> base = out_batch.points.row(i);
            std::span<double> row = starts.row(i);
            for (std::size_t j = 0; j < d; ++j) row[j] = base[j] + offset[j];
        }
        // projection stays centered on the original points, not the starts
        Batch start_batch{std::move(starts), SourceTag::p0};
        const PgdResult moved = pgd_ascend_centered(model, start_batch,
                                                    out_batch.points, attack,
                                                    restart_rng);
        const Tensor scores = energy_forward(model, moved.batch.points);
        for (std::size_t i = 0; i < n; ++i) {
            best[i] = std::max(best[i], scores.values()[i]);
        }
    }

    const Tensor f_in = energy_forward(model, in_batch.points);
    report.adversarial_auroc = ood_auroc(f_in.values(), best);
    return report;
}

DivergenceFlag divergence_monitor(const RunRecord& record, double threshold) {
    if (record.rows.empty()) throw ConfigError("divergence_monitor: record is empty");
    for (const RunRow& row : record.rows) {
        if (!std::isfinite(row.gap) || row.gap > threshold) {
            return DivergenceFlag{true, row.iteration};
        }
    }
    if (record.divergence_iteration) {
        return DivergenceFlag{true, *record.divergence_iteration};
    }
    return DivergenceFlag{};
}

}  // namespace ebmlab
