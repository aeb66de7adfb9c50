#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace saopt {

/// Counter-based random stream.
///
/// Every draw is a pure function of (key, counter), so a stream can be
/// re-derived anywhere from the tags that identify it. `derive` folds extra
/// tags into the key, which is how individual evaluations, operator calls and
/// tree fits get their own streams independent of scheduling order.
///
/// Uniform and normal variates are produced here rather than through
/// <random> distributions, whose output differs between standard libraries.
class Rng {
public:
    using result_type = std::uint64_t;

    constexpr explicit Rng(std::uint64_t seed = 0) noexcept : key_(mix(seed ^ kSeedSalt)) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept {
        return mix(key_ + kGolden * (++counter_));
    }

    /// Child stream keyed by this stream's key and `tag`. Does not advance
    /// this stream.
    [[nodiscard]] constexpr Rng derive(std::uint64_t tag) const noexcept {
        Rng child;
        child.key_ = mix(key_ ^ mix(tag + kGolden));
        return child;
    }

    template <typename... Tags>
    [[nodiscard]] constexpr Rng derive(std::uint64_t first, Tags... rest) const noexcept {
        if constexpr (sizeof...(rest) == 0) {
            return derive(first);
        } else {
            return derive(first).derive(static_cast<std::uint64_t>(rest)...);
        }
    }

    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform() noexcept {
        return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
    }

    /// Uniform on [lo, hi]. Returns lo when lo == hi.
    double uniform(double lo, double hi) noexcept {
        return lo + (hi - lo) * uniform();
    }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n) noexcept {
        // Lemire's multiply-shift with rejection; unbiased.
        std::uint64_t x = (*this)();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                x = (*this)();
                m = static_cast<__uint128_t>(x) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    /// Standard normal via Box-Muller; consumes exactly two raw draws.
    double normal() noexcept {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mean, double stddev) noexcept { return mean + stddev * normal(); }

    [[nodiscard]] constexpr std::uint64_t key() const noexcept { return key_; }

private:
    static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
    static constexpr std::uint64_t kSeedSalt = 0x5A0F7E11C0DE5EEDULL;

    // SplitMix64 finalizer.
    static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

/// Stream tags used by the library. Kept in one place so derivations stay
/// collision-free.
namespace stream {
inline constexpr std::uint64_t kWarmStart = 0x5741524DULL;
inline constexpr std::uint64_t kSimulation = 0x53494DULL;
inline constexpr std::uint64_t kOperators = 0x4F5053ULL;
inline constexpr std::uint64_t kForest = 0x464F52ULL;
inline constexpr std::uint64_t kHoldout = 0x484F4C44ULL;
inline constexpr std::uint64_t kRepetition = 0x524550ULL;
}  // namespace stream

}  // namespace saopt
