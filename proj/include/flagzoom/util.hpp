#pragma once

#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

namespace flagzoom {

/// Deterministic 64-bit generator (xoshiro-free: plain splitmix64 stream).
/// Used instead of std::mt19937_64 + distributions so that streams are
/// identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0,1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    /// Standard normal via Box-Muller (fixed algorithm, no stdlib distribution).
    double normal();

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Runs fn(shard) for shard in [0, n_shards) on `threads` workers.
/// Shard assignment is by index, so results keyed by shard index are
/// independent of the worker count.
void parallel_shards(int n_shards, int threads, const std::function<void(int)>& fn);

/// FNV-1a 64-bit hash, used for config fingerprints in CSV trailers.
std::uint64_t fnv1a64(const std::string& bytes);

/// Greatest common divisor on magnitudes; gcd(0,0) = 0.
std::int64_t gcd64(std::int64_t a, std::int64_t b);

/// gcd of a whole vector (magnitude).
std::int64_t gcd64(const std::vector<std::int64_t>& v);

} // namespace flagzoom
