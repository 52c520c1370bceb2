#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ebmlab {

/// 64-bit FNV-1a over arbitrary bytes. Stable across platforms; used for
/// key-based seed derivation and for content hashes in run manifests.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ull);

/// Derives a child seed from (master, key, index). The mapping is fixed and
/// documented behavior: reproducibility of every run depends on it.
std::uint64_t derive_seed(std::uint64_t master, std::string_view key,
                          std::uint64_t index = 0);

/// Deterministic random stream. All randomness in the library flows through
/// this class so a whole run is a pure function of one master seed.
///
/// Substreams are split off with fork(key): the child seed is derived from
/// (parent seed, key, fork counter), so repeated forks with the same key give
/// fresh but fully reproducible streams, independent of how much the parent
/// has been consumed.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed);

    RngStream fork(std::string_view key);

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64();

    /// Uniform double in [0, 1).
    double uniform();
    double uniform(double lo, double hi);

    /// Standard normal via Box-Muller (independent of the C++ stdlib's
    /// normal_distribution, whose output is implementation-defined).
    double normal();
    double normal(double mean, double stddev);

    /// Unbiased uniform integer in [0, n). n must be positive.
    std::size_t index(std::size_t n);

private:
    std::uint64_t seed_;
    std::uint64_t fork_count_ = 0;
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace ebmlab
