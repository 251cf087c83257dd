#pragma once

#include <cmath>
#include <cstdint>

namespace spde {

// Counter-based random numbers. Every variate is a pure function of
// (seed, counter words), so sampling is reproducible independent of
// call order, thread count, and scheduler.

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace detail

/// SplitMix64 step: advances `state` and returns the next 64-bit word.
constexpr std::uint64_t splitmix64(std::uint64_t& state) {
    state += detail::kGolden;
    return detail::mix64(state);
}

/// Seed for path `index` of a batch driven by `master_seed`.
constexpr std::uint64_t path_seed(std::uint64_t master_seed, std::uint64_t index) {
    std::uint64_t s = master_seed ^ index;
    return splitmix64(s);
}

/// One 64-bit word from the counter (a, b, c, lane) under `seed`.
constexpr std::uint64_t counter_word(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                                     std::uint64_t c, std::uint64_t lane) {
    std::uint64_t h = seed;
    h = detail::mix64(h + detail::kGolden * (a + 1));
    h = detail::mix64(h + detail::kGolden * (b + 1));
    h = detail::mix64(h + detail::kGolden * (c + 1));
    h = detail::mix64(h + detail::kGolden * (lane + 1));
    return h;
}

/// Uniform double in (0, 1], from the top 53 bits of a word.
constexpr double counter_uniform(std::uint64_t word) {
    return static_cast<double>((word >> 11) + 1) * 0x1.0p-53;
}

/// Standard normal variate indexed by (seed, a, b, c), via Box-Muller.
inline double counter_normal(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                             std::uint64_t c) {
    const double u1 = counter_uniform(counter_word(seed, a, b, c, 0));
    const double u2 = counter_uniform(counter_word(seed, a, b, c, 1));
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

}  // namespace spde
