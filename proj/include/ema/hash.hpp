#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>

// Integer-hash randomness. Every random draw in the library is a pure
// function of its inputs so results do not depend on call order, thread
// scheduling or the platform's <random> distributions.
namespace ema::hash {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t combine(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x2545f4914f6cdd1dULL;
    for (auto p : parts) h = splitmix64(h ^ splitmix64(p));
    return h;
}

constexpr std::uint64_t ofString(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Uniform double in [0, 1) with 53 bits of precision.
constexpr double unit(std::uint64_t h) {
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// Bernoulli(p) draw; exact at p = 0 and p = 1.
constexpr bool bernoulli(std::uint64_t h, double p) {
    return unit(h) < p;
}

/// Small counter-based stream for sequences of draws from one seed.
class Stream {
public:
    constexpr explicit Stream(std::uint64_t seed) : seed_(seed) {}
    constexpr std::uint64_t next() { return combine({seed_, counter_++}); }
    constexpr double nextUnit() { return unit(next()); }
    /// Uniform integer in [0, bound).
    constexpr std::uint64_t below(std::uint64_t bound) {
        // multiply-shift; bias is < 2^-64 * bound, negligible here
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next()) * bound) >> 64);
    }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

}  // namespace ema::hash
