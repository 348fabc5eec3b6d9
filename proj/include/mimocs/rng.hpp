#pragma once

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>

namespace mimocs {

/// Purpose tags for derived random streams. Every stochastic object draws
/// from the stream identified by (master seed, tag, indices...).
enum class StreamTag : std::uint64_t {
    Signals = 1,
    Noise = 2,
    Support = 3,
    Phases = 4,
    PowerIteration = 5,
    Trial = 6,
    Probe = 7,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, StreamTag tag,
                                 std::initializer_list<std::uint64_t> indices = {}) {
    std::uint64_t h = splitmix64(master);
    h = splitmix64(h ^ static_cast<std::uint64_t>(tag));
    for (auto i : indices) h = splitmix64(h ^ i);
    return h;
}

/// A seeded random stream with the draws used throughout the library.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}
    RandomStream(std::uint64_t master, StreamTag tag, std::initializer_list<std::uint64_t> indices = {})
        : engine_(derive_seed(master, tag, indices)) {}

    std::mt19937_64& engine() { return engine_; }

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

    double normal() { return normal_(engine_); }

    /// Standard complex Gaussian: (g1 + i g2)/sqrt(2), so E|z|^2 = 1.
    std::complex<double> complex_gaussian() {
        const double re = normal_(engine_);
        const double im = normal_(engine_);
        return {re * (1.0 / std::numbers::sqrt2), im * (1.0 / std::numbers::sqrt2)};
    }

    double rademacher() { return (engine_() >> 63) ? 1.0 : -1.0; }

    /// Uniform on the complex unit circle.
    std::complex<double> steinhaus() { return std::polar(1.0, 2.0 * std::numbers::pi * uniform()); }

    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
    }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

} // namespace mimocs
