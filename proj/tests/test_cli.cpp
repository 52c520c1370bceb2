#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ebmlab/cli.hpp"

namespace fs = std::filesystem;

namespace {

int run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "ebmlab");
    return ebmlab::cli::run(args);
}

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("ebmlab_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_tiny_config(const fs::path& dir) {
    const fs::path p = dir / "tiny.json";
    std::ofstream out(p);
    out << R"({
  "id": "cli_tiny",
  "seed": 2,
  "model": {"hidden": [6]},
  "train": {"batch_size": 8, "schedule": [{"k": 1, "iterations": 5}]},
  "eval": {"grid_resolution": 24, "metric_batch": 16, "overlay_points": 12,
           "generation": {"step_size": 0.1, "steps": 3}},
  "ood": {"enabled": true, "n_samples": 24, "steps": 10, "restarts": 2},
  "outputs": ["run_record", "checkpoint", "support_probe"]
})";
    return p;
}

}  // namespace

TEST_CASE("cli: unknown subcommands and flags exit with usage errors") {
    CHECK(run_cli({"frobnicate"}) == ebmlab::cli::kExitConfigError);
    CHECK(run_cli({"gradcheck", "--no-such-flag"}) == ebmlab::cli::kExitConfigError);
    CHECK(run_cli({}) == ebmlab::cli::kExitConfigError);
    CHECK(run_cli({"--help"}) == ebmlab::cli::kExitOk);
}

TEST_CASE("cli: gradcheck passes on the shipped gradients") {
    CHECK(run_cli({"gradcheck", "--seed", "7", "--trials", "8"}) ==
          ebmlab::cli::kExitOk);
}

TEST_CASE("cli: experiment -> eval -> ood -> plot -> compare round trip") {
    const fs::path dir = temp_dir("roundtrip");
    const fs::path cfg = write_tiny_config(dir);
    const std::string out_a = (dir / "runs_a").string();
    const std::string out_b = (dir / "runs_b").string();

    REQUIRE(run_cli({"experiment", "--config", cfg.string(), "--out", out_a}) ==
            ebmlab::cli::kExitOk);
    const fs::path run_a = fs::path(out_a) / "cli_tiny-seed2";
    REQUIRE(fs::exists(run_a / "checkpoint.ckpt"));

    SUBCASE("config errors are categorized, without partial outputs") {
        CHECK(run_cli({"experiment", "--config", (dir / "missing.json").string(),
                       "--out", out_b}) == ebmlab::cli::kExitConfigError);
        CHECK(run_cli({"experiment", "--config", cfg.string(), "--override",
                       "train.no_such=1", "--out", out_b}) ==
              ebmlab::cli::kExitConfigError);
        CHECK_FALSE(fs::exists(fs::path(out_b) / "cli_tiny-seed2"));
    }
    SUBCASE("eval and ood write reports for a checkpoint") {
        const std::string ckpt = (run_a / "checkpoint.ckpt").string();
        const std::string eval_report = (dir / "eval.json").string();
        CHECK(run_cli({"eval", "--config", cfg.string(), "--checkpoint", ckpt,
                       "--report", eval_report}) == ebmlab::cli::kExitOk);
        std::ifstream in(eval_report);
        const std::string text((std::istreambuf_iterator<char>(in)), {});
        CHECK(text.find("support_probe") != std::string::npos);

        const std::string ood_report = (dir / "ood.json").string();
        CHECK(run_cli({"ood", "--config", cfg.string(), "--checkpoint", ckpt,
                       "--report", ood_report}) == ebmlab::cli::kExitOk);
        std::ifstream ood_in(ood_report);
        const std::string ood_text((std::istreambuf_iterator<char>(ood_in)), {});
        CHECK(ood_text.find("clean_auroc") != std::string::npos);
        CHECK(ood_text.find("adversarial_auroc_small") != std::string::npos);
    }
    SUBCASE("plot emits vector graphics") {
        const std::string ckpt = (run_a / "checkpoint.ckpt").string();
        const std::string svg = (dir / "field.svg").string();
        CHECK(run_cli({"plot", "--config", cfg.string(), "--checkpoint", ckpt,
                       "--file", svg}) == ebmlab::cli::kExitOk);
        std::ifstream in(svg);
        std::string first_line;
        std::getline(in, first_line);
        CHECK(first_line.rfind("<?xml", 0) == 0);
    }
    SUBCASE("missing checkpoint is a runtime error") {
        CHECK(run_cli({"eval", "--config", cfg.string(), "--checkpoint",
                       (dir / "nope.ckpt").string()}) ==
              ebmlab::cli::kExitRuntimeError);
    }
    SUBCASE("same seed reruns are byte-identical; different seeds differ") {
        REQUIRE(run_cli({"experiment", "--config", cfg.string(), "--out", out_b}) ==
                ebmlab::cli::kExitOk);
        const fs::path run_b = fs::path(out_b) / "cli_tiny-seed2";
        const auto read = [](const fs::path& p) {
            std::ifstream in(p, std::ios::binary);
            return std::string((std::istreambuf_iterator<char>(in)), {});
        };
        CHECK(read(run_a / "run_record.tsv") == read(run_b / "run_record.tsv"));
        CHECK(read(run_a / "checkpoint.ckpt") == read(run_b / "checkpoint.ckpt"));

        REQUIRE(run_cli({"experiment", "--config", cfg.string(), "--seed", "9",
                         "--out", out_b}) == ebmlab::cli::kExitOk);
        const fs::path run_c = fs::path(out_b) / "cli_tiny-seed9";
        CHECK(read(run_a / "checkpoint.ckpt") != read(run_c / "checkpoint.ckpt"));
    }
    SUBCASE("train subcommand trims the artifact set") {
        const std::string out_t = (dir / "runs_t").string();
        REQUIRE(run_cli({"train", "--config", cfg.string(), "--out", out_t}) ==
                ebmlab::cli::kExitOk);
        const fs::path run_t = fs::path(out_t) / "cli_tiny-seed2";
        CHECK(fs::exists(run_t / "run_record.tsv"));
        CHECK(fs::exists(run_t / "checkpoint.ckpt"));
        CHECK_FALSE(fs::exists(run_t / "field_final.svg"));
    }
    SUBCASE("compare joins run directories") {
        const std::string out_c = (dir / "runs_c").string();
        REQUIRE(run_cli({"experiment", "--config", cfg.string(), "--seed", "4",
                         "--out", out_c}) == ebmlab::cli::kExitOk);
        const std::string table = (dir / "table.tsv").string();
        CHECK(run_cli({"compare", run_a.string(),
                       (fs::path(out_c) / "cli_tiny-seed4").string(), "--out",
                       table}) == ebmlab::cli::kExitOk);
        std::ifstream in(table);
        std::string header;
        std::getline(in, header);
        CHECK(header.rfind("run\t", 0) == 0);
    }
}
