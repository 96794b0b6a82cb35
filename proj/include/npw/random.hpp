#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace npw {

using Rng = std::mt19937_64;

// splitmix64 finalizer; maps (base, stream) to a well-mixed seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

// One uniform draw in [0,1) per call, so Bernoulli streams stay aligned
// regardless of the probabilities.
double uniform01(Rng& rng);

inline int bernoulli(Rng& rng, double p) { return uniform01(rng) < p ? 1 : 0; }

// n distinct indices from [0, population), Floyd's algorithm.
std::vector<std::size_t> sample_without_replacement(std::size_t population, std::size_t n,
                                                    Rng& rng);

}  // namespace npw
