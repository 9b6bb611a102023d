#pragma once

#include <cstdint>
#include <string_view>

namespace subtrain {

// SplitMix64 finalizer. The whole RNG reduces to this one mixing function,
// which uses only fixed-width integer arithmetic, so streams are identical
// on every platform.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

// Counter-based deterministic generator: the n-th output is
// mix64(seed + n * kGoldenGamma), i.e. SplitMix64 keyed by the seed.
// There is no hidden state beyond the counter, so a generator can be
// reproduced from (seed, counter) alone.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t next_u64() { return mix64(seed_ + (++counter_) * kGoldenGamma); }

    // Uniform in [0, 1), 53 mantissa bits.
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double next_uniform(double lo, double hi) {
        return lo + (hi - lo) * next_unit();
    }

    // Uniform in [0, n). Modulo bias is irrelevant for our n << 2^64;
    // what matters is that the mapping is fixed.
    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

    // Pure function of (seed, label): used to give every layer, partition,
    // and epoch its own independent stream.
    static constexpr std::uint64_t derive_child(std::uint64_t seed, std::uint64_t label) {
        return mix64(mix64(seed + kGoldenGamma) ^ (mix64(label) + kGoldenGamma));
    }

    static constexpr std::uint64_t derive_child(std::uint64_t seed, std::string_view label) {
        return derive_child(seed, fnv1a64(label));
    }

    SeededRng child(std::uint64_t label) const { return SeededRng(derive_child(seed_, label)); }
    SeededRng child(std::string_view label) const { return SeededRng(derive_child(seed_, label)); }

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

} // namespace subtrain
