#include "ebmlab/plot.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "ebmlab/error.hpp"
#include "ebmlab/numerics.hpp"

namespace ebmlab {

namespace {

std::string fmt(double v, const char* spec = "%.3f") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

const char* tag_color(SourceTag tag) {
    switch (tag) {
        case SourceTag::real: return "#1f77b4";
        case SourceTag::p0: return "#d62728";
        case SourceTag::perturbed: return "#ff7f0e";
        case SourceTag::generated: return "#2ca02c";
    }
    return "#000000";
}

struct Mapper {
    double lo_x, hi_x, lo_y, hi_y, margin, size;

    double x(double v) const { return margin + (v - lo_x) / (hi_x - lo_x) * size; }
    double y(double v) const { return margin + (hi_y - v) / (hi_y - lo_y) * size; }
};

// One marching-squares cell: emits the level-crossing segments of the
// scalar field given its four corner values.
void cell_segments(std::ofstream& out, const Mapper& map, double level,
                   double x0, double x1, double y0, double y1,
                   double v00, double v10, double v01, double v11) {
    // edge interpolation points; edges: bottom, right, top, left
    struct Pt {
        double x, y;
    };
    Pt pts[4];
    int n_pts = 0;
    const auto cross = [&](double va, double vb, double ax, double ay, double bx,
                           double by) {
        if ((va < level) == (vb < level)) return;
        const double t = (level - va) / (vb - va);
        pts[n_pts++] = {ax + t * (bx - ax), ay + t * (by - ay)};
    };
    cross(v00, v10, x0, y0, x1, y0);
    cross(v10, v11, x1, y0, x1, y1);
    cross(v01, v11, x0, y1, x1, y1);
    cross(v00, v01, x0, y0, x0, y1);
    // 0, 2, or 4 crossings; pair them in order found (saddles are drawn as
    // two chords, adequate at plot resolution)
    for (int i = 0; i + 1 < n_pts; i += 2) {
        out << "<line x1=\"" << fmt(map.x(pts[i].x)) << "\" y1=\""
            << fmt(map.y(pts[i].y)) << "\" x2=\"" << fmt(map.x(pts[i + 1].x))
            << "\" y2=\"" << fmt(map.y(pts[i + 1].y)) << "\"/>\n";
    }
}

}  // namespace

void field_plot(const EnergyModel& model, const GridSpec& grid,
                std::span<const Batch> overlays,
                const std::filesystem::path& path,
                const FieldPlotOptions& options) {
    validate(grid);
    if (model.input_dim() != 2) throw DimensionError("field_plot: 2D models only");
    if (options.contour_levels == 0 || options.arrow_stride == 0) {
        throw ConfigError("field_plot: contour_levels and arrow_stride must be positive");
    }

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
    const Tensor f = energy_forward(model, points);
    std::vector<double> d_field(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) d_field[i] = sigmoid(f.values()[i]);
    const auto d_at = [&](std::size_t ix, std::size_t iy) {
        return d_field[iy * res + ix];
    };

    const double margin = 30.0;
    const Mapper map{grid.bounds.lo[0], grid.bounds.hi[0], grid.bounds.lo[1],
                     grid.bounds.hi[1], margin, options.pixel_size};
    const double canvas = options.pixel_size + 2.0 * margin;

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("field_plot: cannot open " + path.string());
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(canvas)
        << "\" height=\"" << fmt(canvas) << "\" viewBox=\"0 0 " << fmt(canvas)
        << " " << fmt(canvas) << "\">\n";
    out << "<rect x=\"" << fmt(margin) << "\" y=\"" << fmt(margin) << "\" width=\""
        << fmt(options.pixel_size) << "\" height=\"" << fmt(options.pixel_size)
        << "\" fill=\"white\" stroke=\"#333333\"/>\n";

    // contours of D at evenly spaced levels; the 1/2 contour is emphasized
    for (std::size_t li = 1; li <= options.contour_levels; ++li) {
        const double level =
            static_cast<double>(li) / static_cast<double>(options.contour_levels + 1);
        const bool is_half = std::abs(level - 0.5) < 1e-12;
        out << "<g class=\"contour\" data-level=\"" << fmt(level, "%.6g")
            << "\" stroke=\"" << (is_half ? "#222222" : "#9ecae1")
            << "\" stroke-width=\"" << (is_half ? "1.6" : "0.8") << "\" fill=\"none\">\n";
        for (std::size_t iy = 0; iy + 1 < res; ++iy) {
            for (std::size_t ix = 0; ix + 1 < res; ++ix) {
                cell_segments(out, map, level, xs[ix], xs[ix + 1], ys[iy], ys[iy + 1],
                              d_at(ix, iy), d_at(ix + 1, iy), d_at(ix, iy + 1),
                              d_at(ix + 1, iy + 1));
            }
        }
        out << "</g>\n";
    }

    // unit gradient field on a subsampled grid
    out << "<g class=\"vector-field\" stroke=\"#888888\" stroke-width=\"1\">\n";
    const std::size_t stride = options.arrow_stride;
    std::vector<double> arrow_xy;
    for (std::size_t iy = stride / 2; iy < res; iy += stride) {
        for (std::size_t ix = stride / 2; ix < res; ix += stride) {
            arrow_xy.push_back(xs[ix]);
            arrow_xy.push_back(ys[iy]);
        }
    }
    const std::size_t n_arrows = arrow_xy.size() / 2;
    if (n_arrows > 0) {
        const Tensor arrow_points({n_arrows, 2}, std::move(arrow_xy));
        const Tensor grads = grad_input(model, arrow_points);
        const double arrow_len =
            0.4 * static_cast<double>(stride) * (xs[1] - xs[0]);
        for (std::size_t i = 0; i < n_arrows; ++i) {
            const std::span<const double> g = grads.row(i);
            const double g_norm = norm(g);
            if (g_norm < 1e-12) continue;
            const double ux = g[0] / g_norm, uy = g[1] / g_norm;
            const double px = arrow_points.at(i, 0), py = arrow_points.at(i, 1);
            const double qx = px + arrow_len * ux, qy = py + arrow_len * uy;
            // small head: two back-swept barbs
            const double bx = -0.3 * arrow_len, by = 0.15 * arrow_len;
            out << "<line x1=\"" << fmt(map.x(px)) << "\" y1=\"" << fmt(map.y(py))
                << "\" x2=\"" << fmt(map.x(qx)) << "\" y2=\"" << fmt(map.y(qy))
                << "\" data-gx=\"" << fmt(ux, "%.9g") << "\" data-gy=\""
                << fmt(uy, "%.9g") << "\"/>\n";
            out << "<line x1=\"" << fmt(map.x(qx)) << "\" y1=\"" << fmt(map.y(qy))
                << "\" x2=\"" << fmt(map.x(qx + bx * ux - by * uy)) << "\" y2=\""
                << fmt(map.y(qy + bx * uy + by * ux)) << "\"/>\n";
            out << "<line x1=\"" << fmt(map.x(qx)) << "\" y1=\"" << fmt(map.y(qy))
                << "\" x2=\"" << fmt(map.x(qx + bx * ux + by * uy)) << "\" y2=\""
                << fmt(map.y(qy + bx * uy - by * ux)) << "\"/>\n";
        }
    }
    out << "</g>\n";

    for (const Batch& overlay : overlays) {
        if (overlay.points.rank() != 2 || overlay.dim() != 2) {
            throw DimensionError("field_plot: overlay batches must be 2D");
        }
        out << "<g class=\"overlay\" data-tag=\"" << to_string(overlay.source_tag)
            << "\" fill=\"" << tag_color(overlay.source_tag)
            << "\" fill-opacity=\"0.7\">\n";
        for (std::size_t i = 0; i < overlay.size(); ++i) {
            const std::span<const double> p = overlay.points.row(i);
            out << "<circle cx=\"" << fmt(map.x(p[0])) << "\" cy=\""
                << fmt(map.y(p[1])) << "\" r=\"2.4\"/>\n";
        }
        out << "</g>\n";
    }

    out << "</svg>\n";
    if (!out) throw IoError("field_plot: write failed for " + path.string());
}

}  // namespace ebmlab
