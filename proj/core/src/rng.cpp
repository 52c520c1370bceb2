#include "ebmlab/rng.hpp"

#include <cmath>
#include <numbers>

#include "ebmlab/error.hpp"

namespace ebmlab {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) {
    std::uint64_t h = basis;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

namespace {

// splitmix64 finalizer; decorrelates structured inputs.
std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view key,
                          std::uint64_t index) {
    const std::uint64_t k = fnv1a64(key);
    return mix64(mix64(master) ^ mix64(k + 0x632be59bd9b4e019ull) ^
                 mix64(index * 0xd1342543de82ef95ull + 1));
}

RngStream::RngStream(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

RngStream RngStream::fork(std::string_view key) {
    return RngStream(derive_seed(seed_, key, fork_count_++));
}

std::uint64_t RngStream::next_u64() { return engine_(); }

double RngStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

double RngStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

double RngStream::normal(double mean, double stddev) {
    return mean + stddev * normal();
}

std::size_t RngStream::index(std::size_t n) {
    if (n == 0) throw ConfigError("RngStream::index: n must be positive");
    const std::uint64_t un = n;
    const std::uint64_t min = (0 - un) % un;  // (2^64 - n) mod n
    std::uint64_t x = next_u64();
    while (x < min) x = next_u64();
    return static_cast<std::size_t>(x % un);
}

}  // namespace ebmlab
