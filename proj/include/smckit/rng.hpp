#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace smckit {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace detail

/// Named substream families. A stream is keyed by (master seed, kind, index),
/// so e.g. adding replications never perturbs the dataset stream or earlier
/// replication streams.
enum class StreamKind : std::uint64_t {
    generic = 0,
    dataset = 1,
    oracle = 2,
    replication = 3,
};

/// Seeded random stream. All variate transforms are implemented on top of the
/// (fully specified) mt19937_64 output so draws are bit-stable across
/// platforms and standard-library implementations, not just across runs.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : seed_(seed), gen_(seed) {}

    static RngStream substream(std::uint64_t master, StreamKind kind, std::uint64_t index) {
        std::uint64_t h = detail::splitmix64(master ^ 0xa0761d6478bd642fULL);
        h = detail::splitmix64(h ^ (static_cast<std::uint64_t>(kind) * 0xe7037ed1a0b428dbULL));
        h = detail::splitmix64(h ^ (index * 0x8ebc6af09c88c6e3ULL));
        return RngStream(h);
    }

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform on [0, 1) with 53 random mantissa bits.
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via Box-Muller (cosine branch only, so each call
    /// consumes exactly two generator words).
    double normal() {
        const double u1 = 1.0 - uniform01();  // (0, 1]
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Standard exponential.
    double exponential() { return -std::log(1.0 - uniform01()); }

private:
    std::uint64_t seed_;
    std::mt19937_64 gen_;
};

}  // namespace smckit
