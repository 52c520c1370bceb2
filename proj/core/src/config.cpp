#include "ebmlab/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ebmlab/error.hpp"

namespace ebmlab {

using nlohmann::json;

const char* to_string(Algorithm a) {
    switch (a) {
        case Algorithm::binary_at: return "binary_at";
        case Algorithm::minimax_particles: return "minimax_particles";
    }
    return "unknown";
}

Algorithm algorithm_from_string(const std::string& name) {
    if (name == "binary_at") return Algorithm::binary_at;
    if (name == "minimax_particles") return Algorithm::minimax_particles;
    throw ConfigError("unknown algorithm: " + name);
}

const DistributionSpec& ExperimentSpec::data_spec() const {
    if (!p_data) throw ConfigError("experiment has no p_data");
    return *p_data;
}

const DistributionSpec& ExperimentSpec::source_spec() const {
    if (!p0) throw ConfigError("experiment has no p0");
    return *p0;
}

namespace {

const std::vector<std::string> kKnownOutputs = {
    "run_record",  "checkpoint",    "field_plot_initial", "field_plot_final",
    "support_probe", "maxima_census", "sample_mmd",       "metrics",
    "trajectory",  "particles",     "minimax_report",     "ood_report",
};

json default_tree() {
    json j;
    j["id"] = "custom";
    j["seed"] = 1;
    j["model"] = {{"input_dim", 2},
                  {"hidden", {64, 64, 64}},
                  {"activation", "softplus"}};
    j["domain"] = {{"lo", {-4.0, -4.0}}, {"hi", {4.0, 4.0}}};
    j["p_data"] = {{"kind", "gaussian"},
                   {"mean", {0.0, 0.0}},
                   {"cov", {{0.5, 0.0}, {0.0, 0.5}}},
                   {"clamp_to_domain", false}};
    j["p0"] = {{"kind", "uniform_box"},
               {"lo", {-4.0, -4.0}},
               {"hi", {4.0, 4.0}},
               {"clamp_to_domain", false}};
    j["algorithm"] = "binary_at";
    j["train"] = {{"batch_size", 64},
                  {"learning_rate", 2e-3},
                  {"adam_beta1", 0.0},
                  {"adam_beta2", 0.99},
                  {"adam_eps", 1e-8},
                  {"r1_gamma", 0.1},
                  {"objective", "at_logistic"},
                  {"schedule", json::array({{{"k", 0}, {"iterations", 400}}})},
                  {"attack",
                   {{"step_size", 0.1}, {"zero_grad_tol", 1e-12}, {"clamp_to_domain", false}}},
                  {"real_attack",
                   {{"enabled", false}, {"ball_radius", 0.25}, {"steps", 5}, {"step_size", 0.1}}},
                  {"divergence_threshold", 1e6}};
    j["minimax"] = {{"particle_count", 128},
                    {"critic_steps", 30},
                    {"particle_step", 0.1},
                    {"displacement_tol", 1e-3},
                    {"max_rounds", 400}};
    j["eval"] = {{"grid_resolution", 200},
                 {"mass_level", 0.95},
                 {"maxima_margin", 1e-6},
                 {"mmd_bandwidths", {0.25, 0.5, 1.0}},
                 {"metric_every", 0},
                 {"metric_batch", 256},
                 {"mmd_threshold", 0.0},
                 {"mmd_threshold_window", 1},
                 {"generation", {{"step_size", 0.1}, {"steps", 25}, {"source", "p0"}}},
                 {"overlay_points", 256}};
    j["ood"] = {{"enabled", false},
                {"spec",
                 {{"kind", "gaussian"},
                  {"mean", {2.8, 2.8}},
                  {"cov", {{0.02, 0.0}, {0.0, 0.02}}},
                  {"clamp_to_domain", false}}},
                {"n_samples", 512},
                {"small_radius", 0.25},
                {"large_radius", 100.0},
                {"step_size", 0.1},
                {"steps", 100},
                {"restarts", 5}};
    j["outputs"] = {"run_record", "checkpoint", "field_plot_final"};
    j["variants"] = json::array();
    return j;
}

[[noreturn]] void fail(const std::string& path, const std::string& message) {
    throw ConfigError("config key '" + path + "': " + message);
}

std::string join_path(const std::string& base, const std::string& key) {
    return base.empty() ? key : base + "." + key;
}

void validate_vector(const json& j, const std::string& path, std::size_t dim = 0) {
    if (!j.is_array() || (dim != 0 && j.size() != dim)) {
        fail(path, "expected an array" + (dim ? " of length " + std::to_string(dim) : ""));
    }
    for (const json& v : j) {
        if (!v.is_number()) fail(path, "expected numeric entries");
    }
}

void validate_matrix(const json& j, const std::string& path, std::size_t dim) {
    if (!j.is_array() || j.size() != dim) fail(path, "expected a square matrix");
    for (const json& row : j) validate_vector(row, path, dim);
}

void validate_dist_json(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    if (!j.contains("kind") || !j["kind"].is_string()) fail(path, "missing string 'kind'");
    const std::string kind = j["kind"].get<std::string>();

    auto allow = [&](std::initializer_list<const char*> keys) {
        for (const auto& [key, value] : j.items()) {
            (void)value;
            if (key == "kind" || key == "clamp_to_domain") continue;
            bool ok = false;
            for (const char* k : keys) {
                if (key == k) {
                    ok = true;
                    break;
                }
            }
            if (!ok) fail(join_path(path, key), "unknown key for kind '" + kind + "'");
        }
        if (j.contains("clamp_to_domain") && !j["clamp_to_domain"].is_boolean()) {
            fail(join_path(path, "clamp_to_domain"), "expected a boolean");
        }
    };
    auto require = [&](const char* key) {
        if (!j.contains(key)) fail(path, std::string("kind '") + kind + "' requires '" + key + "'");
    };

    if (kind == "gaussian") {
        allow({"mean", "cov"});
        require("mean");
        require("cov");
        validate_vector(j["mean"], join_path(path, "mean"));
        validate_matrix(j["cov"], join_path(path, "cov"), j["mean"].size());
    } else if (kind == "gaussian_mixture") {
        allow({"components"});
        require("components");
        if (!j["components"].is_array() || j["components"].empty()) {
            fail(join_path(path, "components"), "expected a non-empty array");
        }
        for (const json& c : j["components"]) {
            if (!c.is_object() || !c.contains("weight") || !c.contains("mean") ||
                !c.contains("cov")) {
                fail(join_path(path, "components"),
                     "each component needs weight, mean, cov");
            }
            validate_vector(c["mean"], join_path(path, "components.mean"));
            validate_matrix(c["cov"], join_path(path, "components.cov"), c["mean"].size());
        }
    } else if (kind == "ring") {
        allow({"center", "radius", "thickness"});
        require("center");
        require("radius");
        require("thickness");
        validate_vector(j["center"], join_path(path, "center"));
    } else if (kind == "uniform_box" || kind == "corner_box") {
        allow({"lo", "hi"});
        require("lo");
        require("hi");
        validate_vector(j["lo"], join_path(path, "lo"));
        validate_vector(j["hi"], join_path(path, "hi"), j["lo"].size());
    } else {
        fail(join_path(path, "kind"), "unknown distribution kind '" + kind + "'");
    }
}

bool is_distribution_path(const std::string& path) {
    return path == "p_data" || path == "p0" || path == "ood.spec";
}

void validate_schedule_json(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array");
    for (const json& e : j) {
        if (!e.is_object()) fail(path, "entries must be objects {k, iterations}");
        for (const auto& [key, value] : e.items()) {
            if (key != "k" && key != "iterations") fail(join_path(path, key), "unknown key");
            if (!value.is_number_unsigned() && !value.is_number_integer()) {
                fail(join_path(path, key), "expected a non-negative integer");
            }
        }
        if (!e.contains("k") || !e.contains("iterations")) {
            fail(path, "entries must carry both k and iterations");
        }
    }
}

void validate_variants_json(const json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array");
    for (const json& v : j) {
        if (!v.is_object() || !v.contains("name") || !v.contains("patch")) {
            fail(path, "variants need {name, patch}");
        }
        for (const auto& [key, value] : v.items()) {
            (void)value;
            if (key != "name" && key != "patch") fail(join_path(path, key), "unknown key");
        }
        if (!v["name"].is_string() || !v["patch"].is_object()) {
            fail(path, "variant name must be a string and patch an object");
        }
    }
}

// Rejects keys absent from the default schema and gross type mismatches.
void validate_against_defaults(const json& user, const json& defaults,
                               const std::string& path) {
    if (is_distribution_path(path)) {
        validate_dist_json(user, path);
        return;
    }
    if (path == "train.schedule") {
        validate_schedule_json(user, path);
        return;
    }
    if (path == "variants") {
        validate_variants_json(user, path);
        return;
    }
    if (defaults.is_object()) {
        if (!user.is_object()) fail(path, "expected an object");
        for (const auto& [key, value] : user.items()) {
            if (!defaults.contains(key)) fail(join_path(path, key), "unknown key");
            validate_against_defaults(value, defaults[key], join_path(path, key));
        }
        return;
    }
    if (defaults.is_array()) {
        if (!user.is_array()) fail(path, "expected an array");
        return;
    }
    if (defaults.is_number() && !user.is_number()) fail(path, "expected a number");
    if (defaults.is_boolean() && !user.is_boolean()) fail(path, "expected a boolean");
    if (defaults.is_string() && !user.is_string()) fail(path, "expected a string");
}

// Objects merge key-by-key; arrays and distribution blocks replace wholesale.
void merge_over(json& base, const json& user, const std::string& path) {
    if (is_distribution_path(path) || !user.is_object() || !base.is_object()) {
        base = user;
        return;
    }
    for (const auto& [key, value] : user.items()) {
        merge_over(base[key], value, join_path(path, key));
    }
}

std::vector<double> to_vector(const json& j) {
    std::vector<double> v;
    for (const json& e : j) v.push_back(e.get<double>());
    return v;
}

Tensor to_matrix(const json& j) {
    const std::size_t n = j.size();
    Tensor m({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            m.at(i, k) = j[i][k].get<double>();
        }
    }
    return m;
}

GaussianSpec gaussian_from_json(const json& j) {
    return GaussianSpec{to_vector(j["mean"]), to_matrix(j["cov"])};
}

DistributionSpec dist_from_json(const json& j, const BoxSpec& domain) {
    const std::string kind = j["kind"].get<std::string>();
    const bool clamp = j.value("clamp_to_domain", false);
    if (kind == "gaussian") {
        return DistributionSpec(gaussian_from_json(j), domain, clamp);
    }
    if (kind == "gaussian_mixture") {
        GaussianMixtureSpec mix;
        for (const json& c : j["components"]) {
            mix.components.push_back(
                MixtureComponent{c["weight"].get<double>(), gaussian_from_json(c)});
        }
        return DistributionSpec(std::move(mix), domain, clamp);
    }
    if (kind == "ring") {
        return DistributionSpec(RingSpec{to_vector(j["center"]), j["radius"].get<double>(),
                                         j["thickness"].get<double>()},
                                domain, clamp);
    }
    if (kind == "uniform_box") {
        return DistributionSpec(UniformBoxSpec{BoxSpec{to_vector(j["lo"]), to_vector(j["hi"])}},
                                domain, clamp);
    }
    if (kind == "corner_box") {
        return DistributionSpec(CornerBoxSpec{BoxSpec{to_vector(j["lo"]), to_vector(j["hi"])}},
                                domain, clamp);
    }
    throw ConfigError("unknown distribution kind: " + kind);
}

AttackConfig attack_from_json(const json& j, const BoxSpec& domain) {
    AttackConfig cfg;
    cfg.step_size = j["step_size"].get<double>();
    cfg.zero_grad_tol = j.value("zero_grad_tol", 1e-12);
    if (j.value("clamp_to_domain", false)) cfg.clamp_bounds = domain;
    return cfg;
}

ExperimentSpec spec_from_json(const json& j) {
    ExperimentSpec spec;
    spec.id = j["id"].get<std::string>();
    spec.seed = j["seed"].get<std::uint64_t>();

    const json& model = j["model"];
    spec.input_dim = model["input_dim"].get<std::size_t>();
    spec.hidden.clear();
    for (const json& h : model["hidden"]) spec.hidden.push_back(h.get<std::size_t>());
    spec.activation = activation_from_string(model["activation"].get<std::string>());

    BoxSpec domain{to_vector(j["domain"]["lo"]), to_vector(j["domain"]["hi"])};
    spec.p_data = dist_from_json(j["p_data"], domain);
    spec.p0 = dist_from_json(j["p0"], domain);
    spec.algorithm = algorithm_from_string(j["algorithm"].get<std::string>());

    const json& train = j["train"];
    spec.train.batch_size = train["batch_size"].get<std::size_t>();
    spec.train.learning_rate = train["learning_rate"].get<double>();
    spec.train.adam_beta1 = train["adam_beta1"].get<double>();
    spec.train.adam_beta2 = train["adam_beta2"].get<double>();
    spec.train.adam_eps = train["adam_eps"].get<double>();
    spec.train.r1_gamma = train["r1_gamma"].get<double>();
    spec.train.objective = objective_from_string(train["objective"].get<std::string>());
    spec.train.schedule.clear();
    for (const json& e : train["schedule"]) {
        spec.train.schedule.push_back(
            ScheduleEntry{e["k"].get<std::size_t>(), e["iterations"].get<std::size_t>()});
    }
    spec.train.attack = attack_from_json(train["attack"], domain);
    const json& real_attack = train["real_attack"];
    if (real_attack["enabled"].get<bool>()) {
        AttackConfig ra;
        ra.step_size = real_attack["step_size"].get<double>();
        ra.steps = real_attack["steps"].get<std::size_t>();
        ra.ball_radius = real_attack["ball_radius"].get<double>();
        spec.train.real_attack = ra;
    }
    spec.train.seed = spec.seed;
    spec.train.divergence_threshold = train["divergence_threshold"].get<double>();

    const json& mm = j["minimax"];
    spec.minimax.particle_count = mm["particle_count"].get<std::size_t>();
    spec.minimax.critic_steps = mm["critic_steps"].get<std::size_t>();
    spec.minimax.particle_step = mm["particle_step"].get<double>();
    spec.minimax.displacement_tol = mm["displacement_tol"].get<double>();
    spec.minimax.max_rounds = mm["max_rounds"].get<std::size_t>();

    const json& ev = j["eval"];
    spec.eval.grid_resolution = ev["grid_resolution"].get<std::size_t>();
    spec.eval.mass_level = ev["mass_level"].get<double>();
    spec.eval.maxima_margin = ev["maxima_margin"].get<double>();
    spec.eval.mmd_bandwidths = to_vector(ev["mmd_bandwidths"]);
    spec.eval.metric_every = ev["metric_every"].get<std::size_t>();
    spec.eval.metric_batch = ev["metric_batch"].get<std::size_t>();
    spec.eval.mmd_threshold = ev["mmd_threshold"].get<double>();
    spec.eval.mmd_threshold_window = ev["mmd_threshold_window"].get<std::size_t>();
    if (spec.eval.mmd_threshold_window == 0) {
        throw ConfigError("eval.mmd_threshold_window must be >= 1");
    }
    spec.eval.generation.step_size = ev["generation"]["step_size"].get<double>();
    spec.eval.generation.steps = ev["generation"]["steps"].get<std::size_t>();
    const std::string gen_source = ev["generation"]["source"].get<std::string>();
    if (gen_source == "p0") {
        spec.eval.generation_source = EvalConfig::GenerationSource::p0;
    } else if (gen_source == "domain") {
        spec.eval.generation_source = EvalConfig::GenerationSource::domain;
    } else {
        throw ConfigError("eval.generation.source must be p0 or domain");
    }
    spec.eval.overlay_points = ev["overlay_points"].get<std::size_t>();

    const json& ood = j["ood"];
    spec.ood.enabled = ood["enabled"].get<bool>();
    if (spec.ood.enabled) {
        spec.ood.spec = dist_from_json(ood["spec"], domain);
    }
    spec.ood.n_samples = ood["n_samples"].get<std::size_t>();
    spec.ood.small_radius = ood["small_radius"].get<double>();
    spec.ood.large_radius = ood["large_radius"].get<double>();
    spec.ood.step_size = ood["step_size"].get<double>();
    spec.ood.steps = ood["steps"].get<std::size_t>();
    spec.ood.restarts = ood["restarts"].get<std::size_t>();

    spec.outputs.clear();
    for (const json& o : j["outputs"]) {
        const std::string name = o.get<std::string>();
        bool known = false;
        for (const std::string& k : kKnownOutputs) {
            if (k == name) {
                known = true;
                break;
            }
        }
        if (!known) throw ConfigError("unknown output artifact: " + name);
        spec.outputs.push_back(name);
    }

    spec.variants.clear();
    for (const json& v : j["variants"]) {
        spec.variants.push_back(VariantSpec{v["name"].get<std::string>(), v["patch"].dump()});
    }

    spec.resolved_json = j.dump(2) + "\n";
    return spec;
}

json parse_override_value(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error&) {
        return json(text);  // bare strings need no quotes
    }
}

void apply_override(json& tree, const std::string& entry) {
    const std::size_t eq = entry.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("override must look like key.path=value: " + entry);
    }
    const std::string path = entry.substr(0, eq);
    const json value = parse_override_value(entry.substr(eq + 1));

    json* node = &tree;
    std::istringstream ss(path);
    std::string part;
    std::string walked;
    while (std::getline(ss, part, '.')) {
        walked = join_path(walked, part);
        if (!node->is_object() || !node->contains(part)) {
            throw ConfigError("override references unknown key: " + walked);
        }
        node = &(*node)[part];
    }
    const bool compatible =
        (node->is_number() && value.is_number()) ||
        (node->is_boolean() && value.is_boolean()) ||
        (node->is_string() && value.is_string()) ||
        (node->is_array() && value.is_array()) ||
        (node->is_object() && value.is_object());
    if (!compatible) {
        throw ConfigError("override type mismatch at '" + path + "': config holds " +
                          std::string(node->type_name()) + ", override is " +
                          std::string(value.type_name()));
    }
    *node = value;
}

json progressive_schedule(std::size_t k_from, std::size_t k_to, std::size_t per_k) {
    json schedule = json::array();
    for (std::size_t k = k_from; k <= k_to; ++k) {
        schedule.push_back({{"k", k}, {"iterations", per_k}});
    }
    return schedule;
}

json fixed_schedule(std::size_t k, std::size_t iterations) {
    return json::array({{{"k", k}, {"iterations", iterations}}});
}

json corner_box_json(double lo0, double lo1, double hi0, double hi1) {
    return {{"kind", "corner_box"}, {"lo", {lo0, lo1}}, {"hi", {hi0, hi1}}};
}

// ---- built-in recipes ------------------------------------------------------

json recipe_fig2(bool corner) {
    json j;
    j["id"] = corner ? "fig2_corner" : "fig2_uniform";
    if (corner) j["p0"] = corner_box_json(-4.0, -4.0, -3.0, -3.0);
    j["train"] = {{"learning_rate", 2e-3},
                  {"r1_gamma", 0.1},
                  {"schedule", progressive_schedule(0, 25, 60)}};
    j["eval"] = {{"metric_every", 60}, {"metric_batch", 256}};
    j["outputs"] = {"run_record",  "checkpoint",    "field_plot_initial",
                    "field_plot_final", "support_probe", "maxima_census",
                    "sample_mmd",  "metrics",       "trajectory"};
    return j;
}

json recipe_p0_ablation() {
    json j;
    j["id"] = "p0_ablation";
    j["train"] = {{"learning_rate", 2e-3},
                  {"r1_gamma", 0.1},
                  {"schedule", progressive_schedule(0, 15, 60)}};
    j["eval"] = {{"metric_every", 40},
                 {"metric_batch", 256},
                 {"generation", {{"source", "domain"}}}};
    j["outputs"] = {"run_record", "checkpoint", "metrics", "sample_mmd"};
    j["variants"] = json::array(
        {{{"name", "corner"}, {"patch", {{"p0", corner_box_json(-4, -4, -3, -3)}}}},
         {{"name", "strip"},
          {"patch", {{"p0", {{"kind", "uniform_box"}, {"lo", {-4.0, -4.0}}, {"hi", {-1.0, 4.0}}}}}}},
         {{"name", "full"},
          {"patch", {{"p0", {{"kind", "uniform_box"}, {"lo", {-4.0, -4.0}}, {"hi", {4.0, 4.0}}}}}}}});
    return j;
}

json recipe_k_ablation() {
    json j;
    j["id"] = "k_ablation";
    j["train"] = {{"learning_rate", 2e-3}, {"r1_gamma", 0.1}};
    j["eval"] = {{"metric_every", 40}, {"metric_batch", 256}};
    j["outputs"] = {"run_record", "checkpoint", "metrics", "sample_mmd"};
    // The sampler is the (model, source, budget) triple: each variant is
    // scored at its own training budget, like reading a run's final-state
    // perturbed points as its generated set.
    json variants = json::array();
    for (std::size_t k : {1u, 5u, 15u, 25u}) {
        variants.push_back(
            {{"name", "k" + std::to_string(k)},
             {"patch",
              {{"train", {{"schedule", fixed_schedule(k, 1000)}}},
               {"eval", {{"generation", {{"steps", k}}}}}}}});
    }
    j["variants"] = variants;
    return j;
}

json recipe_progressive_vs_fixed() {
    // Slow learning with a wide attack step: early fixed-K contrastive data
    // races far off-support and keeps the transported distribution
    // disorganized, which is where the schedule earns its speedup.
    json j;
    j["id"] = "progressive_vs_fixed";
    j["p_data"] = {{"kind", "gaussian"},
                   {"mean", {0.0, 0.0}},
                   {"cov", {{0.25, 0.0}, {0.0, 0.25}}}};
    j["train"] = {{"learning_rate", 2e-4},
                  {"r1_gamma", 0.1},
                  {"attack", {{"step_size", 0.3}}}};
    j["eval"] = {{"metric_every", 10},
                 {"metric_batch", 128},
                 {"mmd_threshold", 0.15},
                 {"mmd_threshold_window", 3},
                 {"generation", {{"steps", 24}}}};
    j["outputs"] = {"run_record", "checkpoint", "metrics", "sample_mmd"};
    j["variants"] = json::array(
        {{{"name", "progressive"},
          {"patch", {{"train", {{"schedule", progressive_schedule(0, 25, 50)}}}}}},
         {{"name", "fixed25"},
          {"patch", {{"train", {{"schedule", fixed_schedule(25, 1300)}}}}}}});
    return j;
}

json recipe_stability_pair() {
    json j;
    j["id"] = "stability_pair";
    j["train"] = {{"learning_rate", 1e-2},
                  {"r1_gamma", 0.0},
                  {"schedule", fixed_schedule(10, 4000)}};
    j["outputs"] = {"run_record", "checkpoint"};
    j["variants"] = json::array(
        {{{"name", "at"}, {"patch", {{"train", {{"objective", "at_logistic"}}}}}},
         {{"name", "mle"}, {"patch", {{"train", {{"objective", "ebm_mle"}}}}}}});
    return j;
}

json recipe_minimax(bool corner) {
    json j;
    j["id"] = corner ? "minimax_corner" : "minimax_uniform";
    if (corner) j["p0"] = corner_box_json(-4.0, -4.0, -3.0, -3.0);
    j["algorithm"] = "minimax_particles";
    j["train"] = {{"learning_rate", 5e-3}, {"r1_gamma", 0.05}};
    j["minimax"] = {{"particle_count", 128},
                    {"critic_steps", 25},
                    {"particle_step", 0.1},
                    {"displacement_tol", 1e-3},
                    {"max_rounds", 400}};
    j["outputs"] = {"run_record", "checkpoint", "particles", "minimax_report",
                    "field_plot_final"};
    return j;
}

json recipe_ood_suite() {
    json j;
    j["id"] = "ood_suite";
    j["train"] = {{"learning_rate", 2e-3},
                  {"r1_gamma", 0.1},
                  {"schedule", progressive_schedule(0, 15, 80)},
                  {"real_attack",
                   {{"enabled", true}, {"ball_radius", 0.25}, {"steps", 5}, {"step_size", 0.1}}}};
    j["ood"] = {{"enabled", true}};
    j["outputs"] = {"run_record", "checkpoint", "support_probe", "ood_report"};
    return j;
}

json builtin_recipe_tree(const std::string& name) {
    if (name == "fig2_uniform") return recipe_fig2(false);
    if (name == "fig2_corner") return recipe_fig2(true);
    if (name == "p0_ablation") return recipe_p0_ablation();
    if (name == "k_ablation") return recipe_k_ablation();
    if (name == "progressive_vs_fixed") return recipe_progressive_vs_fixed();
    if (name == "stability_pair") return recipe_stability_pair();
    if (name == "minimax_uniform") return recipe_minimax(false);
    if (name == "minimax_corner") return recipe_minimax(true);
    if (name == "ood_suite") return recipe_ood_suite();
    throw ConfigError("unknown recipe or missing config file: " + name);
}

ExperimentSpec resolve_tree(json user, std::span<const std::string> overrides,
                            std::optional<std::uint64_t> seed_override) {
    json resolved = default_tree();
    validate_against_defaults(user, resolved, "");
    merge_over(resolved, user, "");
    for (const std::string& entry : overrides) apply_override(resolved, entry);
    if (seed_override) resolved["seed"] = *seed_override;
    return spec_from_json(resolved);
}

}  // namespace

std::vector<std::string> builtin_recipe_names() {
    return {"fig2_uniform",  "fig2_corner",        "p0_ablation",
            "k_ablation",    "progressive_vs_fixed", "stability_pair",
            "minimax_uniform", "minimax_corner",   "ood_suite"};
}

bool is_builtin_recipe(const std::string& name) {
    for (const std::string& n : builtin_recipe_names()) {
        if (n == name) return true;
    }
    return false;
}

std::string builtin_recipe_json(const std::string& name) {
    return builtin_recipe_tree(name).dump(2) + "\n";
}

std::string default_config_json() { return default_tree().dump(2) + "\n"; }

ExperimentSpec resolve_config(const std::string& path_or_name,
                              std::span<const std::string> overrides,
                              std::optional<std::uint64_t> seed_override) {
    json user;
    if (std::filesystem::exists(path_or_name)) {
        std::ifstream in(path_or_name);
        if (!in) throw IoError("cannot open config file: " + path_or_name);
        try {
            user = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError("config file " + path_or_name + " is not valid JSON: " + e.what());
        }
    } else {
        user = builtin_recipe_tree(path_or_name);
    }
    return resolve_tree(std::move(user), overrides, seed_override);
}

ExperimentSpec resolve_variant(const ExperimentSpec& base, const VariantSpec& variant) {
    json resolved = json::parse(base.resolved_json);
    json patch = json::parse(variant.patch_json);
    resolved["variants"] = json::array();
    resolved["id"] = base.id + "-" + variant.name;
    resolved.merge_patch(patch);
    // the patch may introduce arbitrary keys; re-validate from scratch
    json clean = resolved;
    return resolve_tree(std::move(clean), {}, {});
}

}  // namespace ebmlab
