#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace qdiff {

/// SplitMix64 finalizer.
inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Stateless generator: every draw is a pure function of (seed, stream, counter),
/// so results do not depend on iteration order or thread count.
class CounterRng {
public:
    constexpr CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
        : key_(mix64(seed ^ mix64(stream ^ 0x6a09e667f3bcc909ULL))) {}

    constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
        return mix64(key_ ^ mix64(counter));
    }

    /// Uniform on the open interval (0, 1).
    double uniform(std::uint64_t counter) const noexcept {
        return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller on counters 2c and 2c+1.
    double gaussian(std::uint64_t counter) const noexcept {
        const double u1 = uniform(2 * counter);
        const double u2 = uniform(2 * counter + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Derive an independent generator, e.g. one per seed or per trial.
    constexpr CounterRng split(std::uint64_t stream) const noexcept {
        CounterRng r(0);
        r.key_ = mix64(key_ ^ mix64(stream + 0xbb67ae8584caa73bULL));
        return r;
    }

private:
    std::uint64_t key_;
};

/// Sequential view over a CounterRng.
class RngStream {
public:
    explicit RngStream(CounterRng rng) noexcept : rng_(rng) {}
    RngStream(std::uint64_t seed, std::uint64_t stream) noexcept : rng_(seed, stream) {}

    std::uint64_t bits() noexcept { return rng_.bits(counter_++); }
    double uniform() noexcept { return rng_.uniform(counter_++); }
    double gaussian() noexcept { return rng_.gaussian(counter_++); }

private:
    CounterRng rng_;
    std::uint64_t counter_ = 0;
};

}  // namespace qdiff
