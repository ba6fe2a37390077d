#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace adamlab {

// Counter-based SplitMix64.
//
//   key     = mix(seed) ^ stream
//   value_n = mix(key + (n + 1) * 0x9E3779B97F4A7C15)
//
// where mix is the SplitMix64 finalizer. Every draw is a pure function of
// (seed, stream, n), so streams can be split without shared state and the
// sequence is identical on every platform.
class CounterRng {
   public:
    static constexpr std::uint64_t golden_gamma = 0x9E3779B97F4A7C15ULL;

    static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    constexpr CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
        : key_(mix(seed) ^ stream) {}

    constexpr std::uint64_t at(std::uint64_t n) const noexcept {
        return mix(key_ + (n + 1) * golden_gamma);
    }

    constexpr std::uint64_t next_u64() noexcept { return at(counter_++); }

    /// Uniform in [0, 1) with 53 random bits.
    double next_unit() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) noexcept {
        return lo + (hi - lo) * next_unit();
    }

    /// Box-Muller, cosine branch only; consumes two draws.
    double normal(double mean = 0.0, double sigma = 1.0) noexcept {
        const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
        const double u2 = next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + sigma * r * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::uint64_t counter() const noexcept { return counter_; }

   private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

namespace streams {
inline constexpr std::uint64_t teacher = 0x7465616368657200ULL;
inline constexpr std::uint64_t noise = 0x6E6F697365000000ULL;
inline constexpr std::uint64_t init = 0x696E697400000000ULL;
}  // namespace streams

}  // namespace adamlab
