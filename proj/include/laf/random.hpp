#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace laf {

// Every stochastic component draws from std::mt19937_64, whose output
// sequence is fixed by the C++ standard. The standard distributions are not
// (their algorithms are implementation-defined), so values are mapped with
// the helpers below to keep results identical across toolchains.
using Rng = std::mt19937_64;

/// Uniform double in [0, 1) built from the top 53 bits of one draw.
double uniform_real(Rng& rng);

/// Uniform integer in [0, bound) by rejection sampling. `bound` must be > 0.
std::uint64_t uniform_index(Rng& rng, std::uint64_t bound);

/// SplitMix64 finaliser; used to derive independent child seeds.
std::uint64_t mix_seed(std::uint64_t value);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

/// `count` distinct indices drawn uniformly from [0, population) by a partial
/// Fisher-Yates shuffle, in draw order.
std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t population,
                                                    std::size_t count);

}  // namespace laf
