#pragma once

#include <cstdint>
#include <initializer_list>

namespace spm {

// SplitMix64 finalizer (Steele, Lea, Flood 2014). Used as a stateless hash so
// that every random draw is addressed by a key instead of a stream position.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Combines several integers into one 64-bit key. Order-sensitive.
constexpr std::uint64_t hash_combine(std::initializer_list<std::uint64_t> parts) noexcept {
    std::uint64_t h = 0x243F6A8885A308D3ULL;
    for (auto p : parts) h = splitmix64(h ^ splitmix64(p));
    return h;
}

/// Uniform double in [0, 1) with 53 random bits.
constexpr double to_unit_double(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Counter-based uniform stream: draw(i) depends only on (seed, i).
/// The stream key is splitmix64(seed) and draw i is splitmix64(key ^ i),
/// so draws are independent of evaluation order.
class KeyedUniform {
public:
    explicit constexpr KeyedUniform(std::uint64_t seed) noexcept : key_(splitmix64(seed)) {}
    constexpr double operator()(std::uint64_t index) const noexcept {
        return to_unit_double(splitmix64(key_ ^ splitmix64(index)));
    }

private:
    std::uint64_t key_;
};

} // namespace spm
