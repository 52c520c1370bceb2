#include "ebmlab/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "ebmlab/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace ebmlab {

namespace {

constexpr char kMagic[8] = {'E', 'B', 'M', 'L', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& in, const char* what) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw IoError(std::string("checkpoint truncated while reading ") + what);
    return v;
}

std::uint64_t read_u64(std::istream& in, const char* what) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw IoError(std::string("checkpoint truncated while reading ") + what);
    return v;
}

}  // namespace

void save_checkpoint(const EnergyModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("save_checkpoint: cannot open " + path.string());

    out.write(kMagic, sizeof(kMagic));
    write_u32(out, kVersion);
    write_u32(out, static_cast<std::uint32_t>(model.activation()));
    write_u64(out, model.input_dim());
    const std::vector<std::size_t> hidden = model.hidden_sizes();
    write_u64(out, hidden.size());
    for (std::size_t h : hidden) write_u64(out, h);

    const ParamVector p = model.params();
    write_u64(out, p.size());
    out.write(reinterpret_cast<const char*>(p.values.data()),
              static_cast<std::streamsize>(p.size() * sizeof(double)));
    if (!out) throw IoError("save_checkpoint: write failed for " + path.string());
}

EnergyModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("load_checkpoint: cannot open " + path.string());

    char magic[8] = {};
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw IoError("load_checkpoint: bad magic in " + path.string());
    }
    const std::uint32_t version = read_u32(in, "version");
    if (version != kVersion) {
        throw IoError("load_checkpoint: unsupported format version " +
                      std::to_string(version));
    }
    const std::uint32_t act_raw = read_u32(in, "activation");
    if (act_raw > static_cast<std::uint32_t>(Activation::tanh)) {
        throw IoError("load_checkpoint: unknown activation code");
    }
    const std::uint64_t input_dim = read_u64(in, "input_dim");
    const std::uint64_t n_hidden = read_u64(in, "hidden layer count");
    if (input_dim == 0 || n_hidden > 1024) {
        throw IoError("load_checkpoint: implausible architecture descriptor");
    }
    std::vector<std::size_t> hidden(n_hidden);
    for (std::uint64_t l = 0; l < n_hidden; ++l) {
        hidden[l] = read_u64(in, "hidden width");
        if (hidden[l] == 0) throw IoError("load_checkpoint: zero hidden width");
    }

    EnergyModel model(input_dim, hidden, static_cast<Activation>(act_raw));
    const std::uint64_t n_params = read_u64(in, "parameter count");
    if (n_params != model.param_count()) {
        throw IoError("load_checkpoint: architecture mismatch, expected " +
                      std::to_string(model.param_count()) + " parameters, file has " +
                      std::to_string(n_params));
    }
    ParamVector p = ParamVector::zeros(n_params);
    in.read(reinterpret_cast<char*>(p.values.data()),
            static_cast<std::streamsize>(n_params * sizeof(double)));
    if (!in) throw IoError("load_checkpoint: truncated parameter block in " + path.string());
    model.set_params(p);
    return model;
}

}  // namespace ebmlab
