#pragma once

#include <cstdint>
#include <random>

namespace trapwalk {

// SplitMix64 finalizer; a strong 64-bit mixer used both for per-site
// environment noise and for deriving independent substream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic RNG stream. The engine is mt19937_64, whose output sequence
// is fixed by the standard, and unit doubles are built by explicit bit
// manipulation, so identical seeds give identical draws on every platform.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : eng_(seed) {}

    // Substream `id` of a master seed; substreams are pairwise independent
    // for all practical purposes and stable across runs and worker counts.
    static RngStream substream(std::uint64_t master, std::uint64_t id) {
        return RngStream(mix64(master + 0x9e3779b97f4a7c15ULL * (id + 1)));
    }

    std::uint64_t next_u64() { return eng_(); }

    // Uniform in [0,1) with 53 random bits.
    double next_unit() { return (eng_() >> 11) * 0x1.0p-53; }

    // Unbiased uniform in [0, n) by rejection.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t(0) - ~std::uint64_t(0) % n;
        std::uint64_t v;
        do {
            v = eng_();
        } while (v >= limit);
        return v % n;
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace trapwalk
