#include "ebmlab/cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <vector>

#include <CLI11.hpp>

#include "ebmlab/checkpoint.hpp"
#include "ebmlab/error.hpp"
#include "ebmlab/experiments.hpp"
#include "ebmlab/numerics.hpp"
#include "ebmlab/objectives.hpp"
#include "ebmlab/plot.hpp"

namespace ebmlab::cli {

namespace {

namespace fs = std::filesystem;

std::string default_out_dir() {
    const char* env = std::getenv("EBMLAB_OUT");
    return env != nullptr ? env : "runs";
}

struct CommonArgs {
    std::string config;
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out = default_out_dir();

    std::optional<std::uint64_t> seed_override() const {
        return seed_set ? std::optional<std::uint64_t>(seed) : std::nullopt;
    }
};

void add_common(CLI::App* sub, CommonArgs& args, bool with_out = true) {
    sub->add_option("--config", args.config,
                    "Experiment config file, or a built-in recipe name")
        ->required();
    sub->add_option("--override", args.overrides,
                    "Config override as dotted.key=value (repeatable)");
    sub->add_option("--seed", args.seed, "Master seed override")
        ->each([&args](const std::string&) { args.seed_set = true; });
    if (with_out) {
        sub->add_option("--out", args.out,
                        "Output directory (default $EBMLAB_OUT or ./runs)");
    }
}

// ---- gradcheck -------------------------------------------------------------

double norm_rel_error(std::span<const double> a, std::span<const double> b) {
    double diff = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double scale = std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
    return std::sqrt(diff) / scale;
}

struct CheckStat {
    double worst = 0.0;
    bool ok = true;
};

void report_line(const char* name, const CheckStat& stat, double tolerance) {
    std::printf("%-34s %s   worst=%.3e  tol=%.0e\n", name,
                stat.ok ? "ok  " : "FAIL", stat.worst, tolerance);
}

int run_gradcheck(std::uint64_t seed, std::size_t trials) {
    RngStream rng(seed);
    const std::vector<std::vector<std::size_t>> archs = {
        {}, {8}, {16, 8}, {16, 16, 8}};
    const std::vector<Activation> acts = {Activation::softplus, Activation::swish,
                                          Activation::tanh};

    CheckStat input_vs_fd, params_vs_fd, r1_vs_fd, closed_vs_reverse, loss_vs_fd;
    const double tol_input = 1e-5, tol_params = 1e-5, tol_r1 = 1e-4,
                 tol_closed = 1e-10, tol_loss = 1e-5;

    for (std::size_t trial = 0; trial < trials; ++trial) {
        RngStream trial_rng = rng.fork("trial");
        const std::size_t dim = 2 + trial_rng.index(3);
        const std::vector<std::size_t>& hidden = archs[trial_rng.index(archs.size())];
        const Activation act = acts[trial_rng.index(acts.size())];
        EnergyModel model = EnergyModel::random(dim, hidden, act, trial_rng);

        const std::size_t n = 2 + trial_rng.index(5);
        Tensor batch({n, dim});
        for (double& v : batch.values()) v = trial_rng.normal(0.0, 1.5);
        Tensor batch_b({n, dim});
        for (double& v : batch_b.values()) v = trial_rng.normal(0.0, 1.5);
        std::vector<double> weights(n);
        for (double& w : weights) w = trial_rng.normal();

        // df/dx against central differences, flattened over the batch
        {
            const Tensor analytic = grad_input(model, batch);
            const auto fn = [&](std::span<const double> flat) {
                const Tensor pts({n, dim},
                                 std::vector<double>(flat.begin(), flat.end()));
                double total = 0.0;
                const Tensor f = energy_forward(model, pts);
                for (double v : f.values()) total += v;
                return total;
            };
            const std::vector<double> fd =
                finite_diff_gradient(fn, batch.values(), 1e-5);
            const double err = norm_rel_error(analytic.values(), fd);
            input_vs_fd.worst = std::max(input_vs_fd.worst, err);
            if (err > tol_input) input_vs_fd.ok = false;
        }

        const ParamVector theta = model.params();
        const auto with_params = [&](std::span<const double> flat, auto&& eval) {
            EnergyModel probe = model;
            ParamVector p;
            p.values.assign(flat.begin(), flat.end());
            probe.set_params(p);
            return eval(probe);
        };

        // weighted parameter gradient against finite differences over theta
        {
            const ParamVector analytic = grad_params(model, batch, weights);
            const auto fn = [&](std::span<const double> flat) {
                return with_params(flat, [&](const EnergyModel& probe) {
                    const Tensor f = energy_forward(probe, batch);
                    double total = 0.0;
                    for (std::size_t i = 0; i < n; ++i) {
                        total += weights[i] * f.values()[i];
                    }
                    return total;
                });
            };
            const std::vector<double> fd =
                finite_diff_gradient(fn, theta.values, 1e-5);
            const double err = norm_rel_error(analytic.values, fd);
            params_vs_fd.worst = std::max(params_vs_fd.worst, err);
            if (err > tol_params) params_vs_fd.ok = false;
        }

        // second-order input-gradient-norm term
        {
            const InputGradNormResult analytic =
                grad_params_of_input_grad_norm(model, batch);
            const auto fn = [&](std::span<const double> flat) {
                return with_params(flat, [&](const EnergyModel& probe) {
                    const Tensor g = grad_input(probe, batch);
                    double total = 0.0;
                    for (std::size_t i = 0; i < n; ++i) {
                        total += squared_norm(g.row(i));
                    }
                    return total / static_cast<double>(n);
                });
            };
            const std::vector<double> fd =
                finite_diff_gradient(fn, theta.values, 1e-4);
            const double err = norm_rel_error(analytic.grad.values, fd);
            r1_vs_fd.worst = std::max(r1_vs_fd.worst, err);
            if (err > tol_r1) r1_vs_fd.ok = false;
        }

        // the two objective-gradient routes, and both against differences
        {
            const Batch real{batch, SourceTag::real};
            const Batch fake{batch_b, SourceTag::perturbed};
            const LossReport report = at_loss(model, real, fake);
            const ParamVector closed = at_grad_closed(model, real, fake);
            const double route_err =
                norm_rel_error(report.grad.values, closed.values);
            closed_vs_reverse.worst = std::max(closed_vs_reverse.worst, route_err);
            if (route_err > tol_closed) closed_vs_reverse.ok = false;

            const auto fn = [&](std::span<const double> flat) {
                return with_params(flat, [&](const EnergyModel& probe) {
                    return at_loss(probe, real, fake).value;
                });
            };
            const std::vector<double> fd =
                finite_diff_gradient(fn, theta.values, 1e-5);
            const double err = norm_rel_error(report.grad.values, fd);
            loss_vs_fd.worst = std::max(loss_vs_fd.worst, err);
            if (err > tol_loss) loss_vs_fd.ok = false;
        }
    }

    std::printf("gradcheck: %zu trials, seed %llu\n", trials,
                static_cast<unsigned long long>(seed));
    report_line("grad_input vs finite diff", input_vs_fd, tol_input);
    report_line("grad_params vs finite diff", params_vs_fd, tol_params);
    report_line("input-grad-norm grad vs fd", r1_vs_fd, tol_r1);
    report_line("closed-form vs reverse grad", closed_vs_reverse, tol_closed);
    report_line("objective grad vs finite diff", loss_vs_fd, tol_loss);

    const bool all_ok = input_vs_fd.ok && params_vs_fd.ok && r1_vs_fd.ok &&
                        closed_vs_reverse.ok && loss_vs_fd.ok;
    return all_ok ? kExitOk : kExitCheckFailed;
}

// ---- checkpoint-driven subcommands ------------------------------------------

EnergyModel load_model(const std::string& path) {
    if (!fs::exists(path)) throw IoError("checkpoint not found: " + path);
    return load_checkpoint(path);
}

void emit(const std::string& text, const std::string& out_file) {
    if (!out_file.empty()) {
        std::ofstream out(out_file, std::ios::trunc);
        if (!out) throw IoError("cannot open " + out_file);
        out << text;
    }
    std::cout << text;
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"Desk-scale energy-model laboratory: adversarially trained "
                 "binary discriminators on 2D synthetic data"};
    app.require_subcommand(1);

    CommonArgs exp_args;
    CLI::App* exp = app.add_subcommand("experiment", "Run a canned experiment recipe");
    add_common(exp, exp_args);

    CommonArgs train_args;
    CLI::App* train = app.add_subcommand("train", "Train a model (run record + checkpoint only)");
    add_common(train, train_args);

    CommonArgs eval_args;
    std::string eval_ckpt, eval_out_file;
    CLI::App* eval = app.add_subcommand("eval", "Probe a trained checkpoint");
    add_common(eval, eval_args, false);
    eval->add_option("--checkpoint", eval_ckpt, "Checkpoint file")->required();
    eval->add_option("--report", eval_out_file, "Also write the JSON report here");

    CommonArgs ood_args;
    std::string ood_ckpt, ood_out_file;
    CLI::App* ood = app.add_subcommand("ood", "Clean and worst-case OOD detection");
    add_common(ood, ood_args, false);
    ood->add_option("--checkpoint", ood_ckpt, "Checkpoint file")->required();
    ood->add_option("--report", ood_out_file, "Also write the JSON report here");

    CommonArgs plot_args;
    std::string plot_ckpt, plot_file = "field.svg";
    CLI::App* plot = app.add_subcommand("plot", "Contour / vector-field plot of a checkpoint");
    add_common(plot, plot_args, false);
    plot->add_option("--checkpoint", plot_ckpt, "Checkpoint file")->required();
    plot->add_option("--file", plot_file, "Output SVG path");

    std::uint64_t gc_seed = 7;
    std::size_t gc_trials = 30;
    CLI::App* gradcheck = app.add_subcommand(
        "gradcheck", "Finite-difference validation of every analytic gradient");
    gradcheck->add_option("--seed", gc_seed, "Seed for random instances");
    gradcheck->add_option("--trials", gc_trials, "Number of random instances");

    std::vector<std::string> cmp_dirs;
    std::string cmp_out;
    CLI::App* compare = app.add_subcommand("compare", "Align metrics across run directories");
    compare->add_option("dirs", cmp_dirs, "Run directories")->expected(-2);
    compare->add_option("--out", cmp_out, "Also write the table here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfigError;
    }

    try {
        if (exp->parsed()) {
            const ExperimentSpec spec = resolve_config(
                exp_args.config, exp_args.overrides, exp_args.seed_override());
            const fs::path dir = run_experiment(spec, exp_args.out);
            std::cout << dir.string() << "\n";
            return kExitOk;
        }
        if (train->parsed()) {
            ExperimentSpec probe = resolve_config(
                train_args.config, train_args.overrides, train_args.seed_override());
            std::vector<std::string> overrides(train_args.overrides.begin(),
                                               train_args.overrides.end());
            overrides.push_back(probe.eval.metric_every > 0
                                    ? R"(outputs=["run_record","checkpoint","metrics"])"
                                    : R"(outputs=["run_record","checkpoint"])");
            const ExperimentSpec spec = resolve_config(
                train_args.config, overrides, train_args.seed_override());
            const fs::path dir = run_experiment(spec, train_args.out);
            std::cout << dir.string() << "\n";
            return kExitOk;
        }
        if (eval->parsed()) {
            const ExperimentSpec spec = resolve_config(
                eval_args.config, eval_args.overrides, eval_args.seed_override());
            const EnergyModel model = load_model(eval_ckpt);
            emit(evaluate_model_report(spec, model), eval_out_file);
            return kExitOk;
        }
        if (ood->parsed()) {
            const ExperimentSpec spec = resolve_config(
                ood_args.config, ood_args.overrides, ood_args.seed_override());
            const EnergyModel model = load_model(ood_ckpt);
            emit(ood_model_report(spec, model), ood_out_file);
            return kExitOk;
        }
        if (plot->parsed()) {
            const ExperimentSpec spec = resolve_config(
                plot_args.config, plot_args.overrides, plot_args.seed_override());
            const EnergyModel model = load_model(plot_ckpt);
            write_field_plot(spec, model, plot_file);
            std::cout << plot_file << "\n";
            return kExitOk;
        }
        if (gradcheck->parsed()) {
            return run_gradcheck(gc_seed, gc_trials);
        }
        if (compare->parsed()) {
            std::vector<fs::path> dirs(cmp_dirs.begin(), cmp_dirs.end());
            emit(compare_runs(dirs), cmp_out);
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return kExitRuntimeError;
    }
    return kExitConfigError;
}

int run(std::span<const std::string> args) {
    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const std::string& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace ebmlab::cli
