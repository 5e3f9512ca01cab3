#pragma once

#include <cstdint>
#include <limits>
#include <random>

#include "pnplab/signal.hpp"

namespace pnplab {

/// SplitMix64: tiny counter-style generator. One instance per sample index
/// keeps Monte-Carlo output independent of how indices are split across
/// workers.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

/// Generator for sample `index` of the stream identified by `seed`.
inline SplitMix64 stream_for(std::uint64_t seed, std::uint64_t index) {
    SplitMix64 mix(seed ^ 0x5851F42D4C957F2DULL);
    const std::uint64_t base = mix();
    SplitMix64 mix2(base + index * 0xD1B54A32D192ED03ULL);
    return SplitMix64(mix2());
}

template <class Rng>
Signal standard_normal(Eigen::Index dim, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Signal out(dim);
    for (Eigen::Index i = 0; i < dim; ++i) out[i] = normal(rng);
    return out;
}

}  // namespace pnplab
