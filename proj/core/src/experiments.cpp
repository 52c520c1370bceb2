#include "ebmlab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ebmlab/checkpoint.hpp"
#include "ebmlab/error.hpp"
#include "ebmlab/evaluation.hpp"
#include "ebmlab/objectives.hpp"
#include "ebmlab/plot.hpp"

namespace ebmlab {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

bool wants(const ExperimentSpec& spec, const std::string& artifact) {
    return std::find(spec.outputs.begin(), spec.outputs.end(), artifact) !=
           spec.outputs.end();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

RngStream stream_for(const ExperimentSpec& spec, std::string_view key) {
    return RngStream(derive_seed(spec.seed, key, 0));
}

/// Test-time generation: draw from the configured source, apply the fixed
/// evaluation attack.
PgdResult generate_samples(const ExperimentSpec& spec, const EnergyModel& model,
                           std::size_t n, std::string_view rng_key,
                           bool record_trajectory = false) {
    RngStream rng = stream_for(spec, rng_key);
    RngStream draw = rng.fork("draw");
    RngStream walk = rng.fork("walk");
    const DistributionSpec domain_uniform(
        UniformBoxSpec{spec.data_spec().domain_bounds()},
        spec.data_spec().domain_bounds());
    const DistributionSpec& source =
        spec.eval.generation_source == EvalConfig::GenerationSource::domain
            ? domain_uniform
            : spec.source_spec();
    const Batch start = sample(source, n, draw, SourceTag::p0);
    AttackConfig attack = spec.eval.generation;
    attack.record_trajectory = record_trajectory;
    PgdResult result = pgd_ascend(model, start, attack, walk);
    result.batch.source_tag = SourceTag::generated;
    return result;
}

struct MetricRow {
    std::size_t iteration;
    double mmd;
};

void write_metrics(const fs::path& path, std::span<const MetricRow> rows) {
    std::ostringstream out;
    out << "iteration\tmmd2\n";
    for (const MetricRow& r : rows) {
        out << r.iteration << '\t' << fmt(r.mmd) << '\n';
    }
    write_text(path, out.str());
}

json run_single(const ExperimentSpec& spec, const fs::path& dir);

json eval_report_json(const ExperimentSpec& spec, const EnergyModel& model) {
    const GridSpec grid{spec.data_spec().domain_bounds(), spec.eval.grid_resolution};
    json report;

    const SupportProbeReport probe =
        support_probe(model, spec.data_spec(), grid, spec.eval.mass_level);
    report["support_probe"] = {
        {"mean_abs_dev_on_support", probe.mean_abs_dev_on_support},
        {"max_d_off_support", probe.max_d_off_support},
        {"fraction_off_support_leq_half", probe.fraction_off_support_leq_half},
        {"on_count", probe.on_count},
        {"off_count", probe.off_count}};

    const SupportRegion region = support_region(spec.data_spec(), spec.eval.mass_level);
    const MaximaCensus census =
        local_maxima_census(model, grid, spec.eval.maxima_margin, &region);
    report["maxima_census"] = {{"total", census.all.size()},
                               {"off_support", census.off_support.size()}};

    RngStream rng = stream_for(spec, "sample-mmd");
    RngStream ref_rng = rng.fork("reference");
    const Batch reference =
        sample(spec.data_spec(), spec.eval.metric_batch, ref_rng, SourceTag::real);
    const Batch generated =
        generate_samples(spec, model, spec.eval.metric_batch, "sample-mmd-gen").batch;
    report["sample_mmd2"] = mmd2(generated, reference, spec.eval.mmd_bandwidths);
    return report;
}

json ood_report_json(const ExperimentSpec& spec, const EnergyModel& model) {
    if (!spec.ood.enabled) {
        throw ConfigError("ood report requested but the config's ood block is disabled");
    }
    RngStream rng = stream_for(spec, "ood");
    RngStream in_rng = rng.fork("in");
    RngStream out_rng = rng.fork("out");
    RngStream attack_rng = rng.fork("attack");
    const Batch in_batch =
        sample(spec.data_spec(), spec.ood.n_samples, in_rng, SourceTag::real);
    const Batch out_batch =
        sample(*spec.ood.spec, spec.ood.n_samples, out_rng, SourceTag::p0);

    AttackConfig attack;
    attack.step_size = spec.ood.step_size;
    attack.steps = spec.ood.steps;
    attack.ball_radius = spec.ood.small_radius;
    const OodReport small = adversarial_ood_auroc(model, in_batch, out_batch, attack,
                                                  spec.ood.restarts, attack_rng);
    attack.ball_radius = spec.ood.large_radius;
    const OodReport large = adversarial_ood_auroc(model, in_batch, out_batch, attack,
                                                  spec.ood.restarts, attack_rng);
    return json{{"clean_auroc", small.clean_auroc},
                {"adversarial_auroc_small", small.adversarial_auroc},
                {"adversarial_auroc_large", large.adversarial_auroc},
                {"small_radius", spec.ood.small_radius},
                {"large_radius", spec.ood.large_radius},
                {"restarts", spec.ood.restarts},
                {"steps", spec.ood.steps},
                {"score_direction", small.score_direction}};
}

// Ablation recipes: run every variant in a subdirectory, then join their
// sample-quality tables and summarize orderings.
json run_variants(const ExperimentSpec& spec, const fs::path& dir) {
    json report;
    report["id"] = spec.id;
    report["seed"] = spec.seed;
    json variants = json::object();

    std::vector<std::pair<std::string, json>> variant_reports;
    for (const VariantSpec& v : spec.variants) {
        const ExperimentSpec sub = resolve_variant(spec, v);
        const fs::path sub_dir = dir / "variants" / v.name;
        fs::create_directories(sub_dir);
        json sub_report = run_single(sub, sub_dir);
        variants[v.name] = sub_report;
        variant_reports.emplace_back(v.name, std::move(sub_report));
    }
    report["variants"] = variants;

    // joined MMD-vs-iteration table when every variant produced one
    bool all_metrics = true;
    for (const auto& [name, rep] : variant_reports) {
        if (!rep.contains("metrics_file")) all_metrics = false;
    }
    if (all_metrics && !variant_reports.empty()) {
        std::ostringstream out;
        out << "iteration";
        std::vector<std::vector<MetricRow>> columns;
        for (const auto& [name, rep] : variant_reports) {
            out << "\tmmd2_" << name;
            std::vector<MetricRow> rows;
            std::ifstream in(dir / "variants" / name / "metrics.tsv");
            std::string line;
            std::getline(in, line);  // header
            while (std::getline(in, line)) {
                std::istringstream ss(line);
                MetricRow r{};
                if (ss >> r.iteration >> r.mmd) rows.push_back(r);
            }
            columns.push_back(std::move(rows));
        }
        out << '\n';
        const std::size_t n_rows = columns.empty() ? 0 : columns.front().size();
        for (std::size_t i = 0; i < n_rows; ++i) {
            out << columns.front()[i].iteration;
            for (const auto& col : columns) {
                if (i < col.size()) {
                    out << '\t' << fmt(col[i].mmd);
                } else {
                    out << "\tNA";
                }
            }
            out << '\n';
        }
        write_text(dir / "ablation_metrics.tsv", out.str());
    }
    return report;
}

json run_single(const ExperimentSpec& spec, const fs::path& dir) {
    fs::create_directories(dir);
    write_text(dir / "resolved_config.json", spec.resolved_json);

    json report;
    report["id"] = spec.id;
    report["seed"] = spec.seed;

    RngStream init_rng = stream_for(spec, "model-init");
    EnergyModel model = EnergyModel::random(spec.input_dim, spec.hidden,
                                            spec.activation, init_rng);

    const GridSpec grid{spec.data_spec().domain_bounds(), spec.eval.grid_resolution};

    const auto overlay_batches = [&](const EnergyModel& m, bool with_generated) {
        std::vector<Batch> overlays;
        RngStream rng = stream_for(spec, "plot-overlays");
        RngStream real_rng = rng.fork("real");
        RngStream p0_rng = rng.fork("p0");
        overlays.push_back(
            sample(spec.data_spec(), spec.eval.overlay_points, real_rng, SourceTag::real));
        overlays.push_back(
            sample(spec.source_spec(), spec.eval.overlay_points, p0_rng, SourceTag::p0));
        if (with_generated) {
            overlays.push_back(generate_samples(spec, m, spec.eval.overlay_points,
                                                "plot-generated")
                                   .batch);
        }
        return overlays;
    };

    if (wants(spec, "field_plot_initial")) {
        field_plot(model, grid, overlay_batches(model, false), dir / "field_initial.svg");
    }

    // during-training sample quality
    std::vector<MetricRow> metrics;
    IterationHook hook;
    if (spec.eval.metric_every > 0 && wants(spec, "metrics")) {
        hook = [&](std::size_t iteration, const EnergyModel& m) {
            if ((iteration + 1) % spec.eval.metric_every != 0) return;
            RngStream rng(derive_seed(spec.seed, "metric-eval", iteration));
            RngStream ref_rng = rng.fork("reference");
            RngStream draw = rng.fork("draw");
            RngStream walk = rng.fork("walk");
            const Batch reference =
                sample(spec.data_spec(), spec.eval.metric_batch, ref_rng, SourceTag::real);
            AttackConfig attack = spec.eval.generation;
            const DistributionSpec domain_uniform(
                UniformBoxSpec{spec.data_spec().domain_bounds()},
                spec.data_spec().domain_bounds());
            const DistributionSpec& gen_source =
                spec.eval.generation_source == EvalConfig::GenerationSource::domain
                    ? domain_uniform
                    : spec.source_spec();
            const Batch start =
                sample(gen_source, spec.eval.metric_batch, draw, SourceTag::p0);
            const Batch generated = pgd_ascend(m, start, attack, walk).batch;
            metrics.push_back(
                MetricRow{iteration, mmd2(generated, reference, spec.eval.mmd_bandwidths)});
        };
    }

    RunRecord record;
    std::optional<Batch> particles;
    if (spec.algorithm == Algorithm::minimax_particles) {
        MinimaxHook mm_hook;
        std::optional<Batch> metric_reference;
        if (spec.eval.metric_every > 0 && wants(spec, "metrics")) {
            RngStream ref_rng(derive_seed(spec.seed, "minimax-metric", 0));
            metric_reference = sample(spec.data_spec(), spec.eval.metric_batch,
                                      ref_rng, SourceTag::real);
            mm_hook = [&](std::size_t round, const EnergyModel&,
                          const Batch& current) {
                if ((round + 1) % spec.eval.metric_every != 0) return;
                metrics.push_back(MetricRow{
                    round, mmd2(current, *metric_reference, spec.eval.mmd_bandwidths)});
            };
        }
        MinimaxResult mm =
            train_minimax_particles(model, spec.data_spec(), spec.source_spec(),
                                    spec.train, spec.minimax, mm_hook);
        record = std::move(mm.record);
        particles = std::move(mm.particles);
    } else if (spec.train.objective == Objective::ebm_mle) {
        record = train_ebm_mle_with_pgd(model, spec.data_spec(), spec.source_spec(),
                                        spec.train, hook);
    } else if (spec.train.schedule.size() == 1) {
        record = train_binary_at(model, spec.data_spec(), spec.source_spec(),
                                 spec.train, hook);
    } else {
        record = train_progressive(model, spec.data_spec(), spec.source_spec(),
                                   spec.train, hook);
    }

    if (wants(spec, "run_record")) {
        record.write_tsv(dir / "run_record.tsv");
        record.write_timing(dir / "timing.txt");
    }
    if (wants(spec, "metrics")) {
        write_metrics(dir / "metrics.tsv", metrics);
        report["metrics_file"] = "metrics.tsv";
        if (spec.eval.mmd_threshold > 0.0) {
            // converged = reaches the threshold and stays below it for the
            // configured window of consecutive measurements
            json reached = nullptr;
            const std::size_t w = spec.eval.mmd_threshold_window;
            for (std::size_t k = 0; k + w <= metrics.size(); ++k) {
                bool all_below = true;
                for (std::size_t j = 0; j < w; ++j) {
                    if (metrics[k + j].mmd >= spec.eval.mmd_threshold) {
                        all_below = false;
                        break;
                    }
                }
                if (all_below) {
                    reached = metrics[k].iteration;
                    break;
                }
            }
            report["iterations_to_mmd_threshold"] = reached;
            report["mmd_threshold"] = spec.eval.mmd_threshold;
        }
        if (!metrics.empty()) report["final_metric_mmd2"] = metrics.back().mmd;
    }
    if (wants(spec, "checkpoint")) {
        save_checkpoint(model, dir / "checkpoint.ckpt");
    }

    const DivergenceFlag flag =
        divergence_monitor(record, spec.train.divergence_threshold);
    report["diverged"] = flag.diverged;
    report["divergence_iteration"] =
        flag.iteration ? json(*flag.iteration) : json(nullptr);
    if (!record.rows.empty()) {
        const RunRow& last = record.rows.back();
        report["iterations_run"] = record.rows.size();
        report["final_value"] = last.value;
        report["final_gap"] = last.gap;
    }

    if (wants(spec, "trajectory") || wants(spec, "field_plot_final")) {
        const bool record_traj = wants(spec, "trajectory");
        PgdResult gen = generate_samples(spec, model, spec.eval.overlay_points,
                                         "plot-generated", record_traj);
        if (record_traj) {
            gen.trajectory->write_tsv(dir / "trajectory.tsv");
        }
        if (wants(spec, "field_plot_final")) {
            std::vector<Batch> overlays = overlay_batches(model, false);
            // the generated overlay is the trajectory's terminal state
            overlays.push_back(gen.batch);
            if (particles) {
                Batch p = *particles;
                p.source_tag = SourceTag::generated;
                overlays.push_back(std::move(p));
            }
            field_plot(model, grid, overlays, dir / "field_final.svg");
        }
    }

    if (wants(spec, "support_probe") || wants(spec, "maxima_census") ||
        wants(spec, "sample_mmd")) {
        const json eval_report = eval_report_json(spec, model);
        if (wants(spec, "support_probe")) {
            report["support_probe"] = eval_report["support_probe"];
        }
        if (wants(spec, "maxima_census")) {
            report["maxima_census"] = eval_report["maxima_census"];
        }
        if (wants(spec, "sample_mmd")) {
            report["sample_mmd2"] = eval_report["sample_mmd2"];
        }
    }

    if (particles && wants(spec, "particles")) {
        std::ostringstream out;
        out << "x0\tx1\n";
        for (std::size_t i = 0; i < particles->size(); ++i) {
            const std::span<const double> p = particles->points.row(i);
            out << fmt(p[0]) << '\t' << fmt(p[1]) << '\n';
        }
        write_text(dir / "particles.tsv", out.str());
    }

    if (particles && wants(spec, "minimax_report")) {
        RngStream rng = stream_for(spec, "minimax-eval");
        RngStream ref_rng = rng.fork("reference");
        RngStream perm_rng = rng.fork("permutations");
        const Batch reference =
            sample(spec.data_spec(), particles->size(), ref_rng, SourceTag::real);
        const double observed = mmd2(*particles, reference, spec.eval.mmd_bandwidths);
        std::vector<double> null_values = mmd2_permutation_null(
            *particles, reference, spec.eval.mmd_bandwidths, 200, perm_rng);
        std::sort(null_values.begin(), null_values.end());
        const double p99 = null_values[static_cast<std::size_t>(
            0.99 * static_cast<double>(null_values.size() - 1))];
        report["minimax"] = {{"particle_mmd2", observed},
                             {"null_p99", p99},
                             {"converged", observed < p99},
                             {"rounds", record.rows.size()}};
    }

    if (spec.ood.enabled && wants(spec, "ood_report")) {
        report["ood"] = ood_report_json(spec, model);
    }

    write_text(dir / "report.json", report.dump(2) + "\n");
    return report;
}

void write_manifest(const ExperimentSpec& spec, const fs::path& dir) {
    json manifest;
    manifest["id"] = spec.id;
    manifest["seed"] = spec.seed;
    json files = json::object();
    std::vector<fs::path> paths;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (name == "manifest.json" || name == "timing.txt" || name == "status.json") {
            continue;  // volatile or self-referential
        }
        paths.push_back(entry.path());
    }
    std::sort(paths.begin(), paths.end());
    for (const fs::path& p : paths) {
        files[fs::relative(p, dir).generic_string()] = file_content_hash(p);
    }
    manifest["files"] = files;
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace

std::string file_content_hash(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("file_content_hash: cannot open " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        h = fnv1a64(std::string_view(buf, static_cast<std::size_t>(in.gcount())), h);
        if (in.eof()) break;
    }
    char hex[32];
    std::snprintf(hex, sizeof(hex), "fnv1a64:%016llx",
                  static_cast<unsigned long long>(h));
    return hex;
}

fs::path run_experiment(const ExperimentSpec& spec, const fs::path& out_root) {
    const fs::path dir =
        out_root / (spec.id + "-seed" + std::to_string(spec.seed));
    fs::create_directories(dir);
    try {
        json report;
        if (spec.variants.empty()) {
            report = run_single(spec, dir);
        } else {
            write_text(dir / "resolved_config.json", spec.resolved_json);
            report = run_variants(spec, dir);
            write_text(dir / "report.json", report.dump(2) + "\n");
        }
        write_text(dir / "status.json", json({{"ok", true}}).dump(2) + "\n");
        write_manifest(spec, dir);
    } catch (const std::exception& e) {
        // flag the partial run, then propagate
        write_text(dir / "status.json",
                   json({{"ok", false}, {"error", e.what()}}).dump(2) + "\n");
        throw;
    }
    return dir;
}

std::string evaluate_model_report(const ExperimentSpec& spec,
                                  const EnergyModel& model) {
    return eval_report_json(spec, model).dump(2) + "\n";
}

std::string ood_model_report(const ExperimentSpec& spec, const EnergyModel& model) {
    return ood_report_json(spec, model).dump(2) + "\n";
}

void write_field_plot(const ExperimentSpec& spec, const EnergyModel& model,
                      const fs::path& path) {
    const GridSpec grid{spec.data_spec().domain_bounds(), spec.eval.grid_resolution};
    std::vector<Batch> overlays;
    RngStream rng = stream_for(spec, "plot-overlays");
    RngStream real_rng = rng.fork("real");
    RngStream p0_rng = rng.fork("p0");
    overlays.push_back(
        sample(spec.data_spec(), spec.eval.overlay_points, real_rng, SourceTag::real));
    overlays.push_back(
        sample(spec.source_spec(), spec.eval.overlay_points, p0_rng, SourceTag::p0));
    overlays.push_back(
        generate_samples(spec, model, spec.eval.overlay_points, "plot-generated").batch);
    field_plot(model, grid, overlays, path);
}

std::string compare_runs(std::span<const fs::path> dirs) {
    if (dirs.size() < 2) throw ConfigError("compare_runs: need at least two run directories");

    const std::vector<std::string> columns = {
        "final_value",    "final_gap",  "sample_mmd2", "final_metric_mmd2",
        "iterations_to_mmd_threshold", "iterations_run", "diverged",
        "divergence_iteration"};

    std::ostringstream out;
    out << "run";
    for (const std::string& c : columns) out << '\t' << c;
    out << '\n';

    for (const fs::path& dir : dirs) {
        const fs::path report_path = dir / "report.json";
        if (!fs::exists(report_path)) {
            throw IoError("compare_runs: missing report.json in " + dir.string());
        }
        std::ifstream in(report_path);
        json report = json::parse(in);
        if (!report.contains("id")) {
            throw IoError("compare_runs: report in " + dir.string() + " lacks an id");
        }
        out << report["id"].get<std::string>() << "-seed"
            << report["seed"].get<std::uint64_t>();
        for (const std::string& c : columns) {
            out << '\t';
            if (!report.contains(c) || report[c].is_null()) {
                out << "NA";
            } else if (report[c].is_boolean()) {
                out << (report[c].get<bool>() ? "true" : "false");
            } else if (report[c].is_number_float()) {
                out << fmt(report[c].get<double>());
            } else {
                out << report[c].dump();
            }
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace ebmlab
