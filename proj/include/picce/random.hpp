#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace picce {

/// Seed for a named sub-stream: the component name is hashed (FNV-1a) into
/// the base seed and mixed with splitmix64, so every component draws from an
/// independent, reproducible stream.
std::uint64_t derive_seed(std::uint64_t base, std::string_view component);
std::uint64_t derive_seed(std::uint64_t base, std::string_view component, std::uint64_t index);

/// Uniform double in [0, 1) built from the top 53 bits of one draw.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Inverse-CDF draw from a discrete distribution (weights need not be normalized).
std::size_t sample_discrete(std::span<const double> probs, std::mt19937_64& rng);

/// Standard normal via Box-Muller on uniform01, stable across standard libraries.
double standard_normal(std::mt19937_64& rng);

}  // namespace picce
