#pragma once

#include <cstdint>

#include "abplan/math/normal.hpp"

namespace abplan::math {

// Stateless counter-based generator: draw k of stream s is a pure function of
// (seed, s, k). Monte Carlo results are therefore bit-identical for a fixed
// seed at any batching or parallelism, and scans over a parameter can share
// draws (common random numbers) by reusing (stream, counter) indices.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t bits(std::uint64_t stream, std::uint64_t counter) const {
        // Independent SplitMix64 sequences keyed by a finalized per-stream seed.
        const std::uint64_t s =
            finalize(seed_ ^ finalize(stream * 0xd1342543de82ef95ULL + 0x9e3779b97f4a7c15ULL));
        return finalize(s + counter * 0x9e3779b97f4a7c15ULL);
    }

    // Uniform on the open interval (0,1); 53-bit resolution, endpoints excluded.
    double uniform(std::uint64_t stream, std::uint64_t counter) const {
        return (static_cast<double>(bits(stream, counter) >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal(std::uint64_t stream, std::uint64_t counter) const {
        return norm_cdf_inv(uniform(stream, counter));
    }

    std::uint64_t seed() const { return seed_; }

private:
    static std::uint64_t finalize(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
};

}  // namespace abplan::math
