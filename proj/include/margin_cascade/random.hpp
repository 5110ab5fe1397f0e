#ifndef MARGIN_CASCADE_RANDOM_HPP
#define MARGIN_CASCADE_RANDOM_HPP

/// \file random.hpp
///
/// Portable random draws on top of std::mt19937_64.
///
/// The standard distributions (uniform_real_distribution, lognormal_distribution, ...)
/// are implementation-defined, so two standard libraries can turn the same engine
/// output into different numbers. Every draw used by the simulator goes through the
/// transforms below instead, which consume a documented number of 64-bit engine words:
///
///   uniform01      one word:  (w >> 11) * 2^-53, in [0, 1)
///   uniform_index  one or more words (rejection): w < 2^64 - (2^64 mod n), result w mod n
///   standard_normal two words: Box-Muller cosine branch, u1 = 1 - uniform01, u2 = uniform01
///
/// Together with mt19937_64 (fully specified by the standard) this makes every run
/// bit-reproducible across platforms.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace margin_cascade {

using engine = std::mt19937_64;

/// SplitMix64 finalizer. Used to decorrelate seeds derived from small integers.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Combines a seed with a tag into a new seed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
    return splitmix64(splitmix64(seed) ^ splitmix64(tag + 0x632be59bd9b4e019ULL));
}

/// Stream tags for the independent engines used by one simulation.
inline constexpr std::uint64_t prices_stream = 1;
inline constexpr std::uint64_t holdings_stream = 2;
inline constexpr std::uint64_t shock_stream = 3;

inline engine make_engine(std::uint64_t seed, std::uint64_t stream) {
    return engine{derive_seed(seed, stream)};
}

inline double uniform01(engine& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n). n must be positive.
inline std::uint64_t uniform_index(engine& gen, std::uint64_t n) {
    // 2^64 mod n, computed without 128-bit arithmetic
    const std::uint64_t rem = (0 - n) % n;
    const std::uint64_t limit = 0 - rem;  // == 2^64 - rem (wraps to 0 when rem == 0)
    for (;;) {
        const std::uint64_t w = gen();
        if (rem == 0 || w < limit) return w % n;
    }
}

inline double standard_normal(engine& gen) {
    const double u1 = 1.0 - uniform01(gen);  // (0, 1]
    const double u2 = uniform01(gen);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace margin_cascade

#endif  // MARGIN_CASCADE_RANDOM_HPP
