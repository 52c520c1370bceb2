#include "ebmlab/run_record.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "ebmlab/error.hpp"

namespace ebmlab {

namespace {

constexpr const char* kHeader =
    "iteration\tk\tvalue\treal_term\tfake_term\tgap\tmean_displacement\tr1_value\tgrad_norm";

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void RunRecord::write_tsv(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("RunRecord::write_tsv: cannot open " + path.string());
    out << kHeader << '\n';
    for (const RunRow& r : rows) {
        out << r.iteration << '\t' << r.k << '\t' << fmt(r.value) << '\t'
            << fmt(r.real_term) << '\t' << fmt(r.fake_term) << '\t' << fmt(r.gap)
            << '\t' << fmt(r.mean_displacement) << '\t' << fmt(r.r1_value) << '\t'
            << fmt(r.grad_norm) << '\n';
    }
    if (divergence_iteration) {
        out << "# diverged_at\t" << *divergence_iteration << '\n';
    }
    if (!out) throw IoError("RunRecord::write_tsv: write failed");
}

RunRecord RunRecord::read_tsv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("RunRecord::read_tsv: cannot open " + path.string());
    RunRecord record;
    std::string line;
    if (!std::getline(in, line) || line != kHeader) {
        throw IoError("RunRecord::read_tsv: unexpected header in " + path.string());
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.rfind("# diverged_at", 0) == 0) {
            const std::size_t tab = line.find('\t');
            record.divergence_iteration = std::stoull(line.substr(tab + 1));
            continue;
        }
        std::istringstream ss(line);
        RunRow r;
        if (!(ss >> r.iteration >> r.k >> r.value >> r.real_term >> r.fake_term >>
              r.gap >> r.mean_displacement >> r.r1_value >> r.grad_norm)) {
            throw IoError("RunRecord::read_tsv: malformed row in " + path.string());
        }
        record.rows.push_back(r);
    }
    return record;
}

void RunRecord::write_timing(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("RunRecord::write_timing: cannot open " + path.string());
    out << "iteration\twall_ms\n";
    for (const RunRow& r : rows) {
        out << r.iteration << '\t' << fmt(r.wall_ms) << '\n';
    }
}

}  // namespace ebmlab
