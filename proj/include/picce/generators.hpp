#pragma once

// Seeded random ConditionalPoints and score vectors for randomized checks.

#include <random>

#include "picce/core.hpp"

namespace picce {

/// Uniform draw from the probability simplex (flat Dirichlet).
Vec random_simplex(std::size_t n, std::mt19937_64& rng);

/// Uniform conditional accuracies (independent) or a flat-Dirichlet pattern
/// table per label (full joint). Roughly half the points get a random
/// wrong-label profile.
ConditionalPoint random_point(std::size_t num_classes, std::size_t num_experts,
                              ExpertModelKind kind, std::mt19937_64& rng);

/// Conditionally independent point with a dominant expert at a random index:
/// its accuracy on every class is at least every peer's, which makes the
/// information-advantage condition hold.
ConditionalPoint random_dominant_point(std::size_t num_classes, std::size_t num_experts,
                                       std::mt19937_64& rng);

/// Entries uniform in [-scale, scale].
Vec random_scores(std::size_t dim, double scale, std::mt19937_64& rng);

}  // namespace picce
