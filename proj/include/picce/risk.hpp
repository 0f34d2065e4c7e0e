#pragma once

// Closed-form conditional risks E[surrogate | X = x] for the three families,
// their dummy (augmented) label distributions, and a Monte-Carlo oracle.
//
// Every conditional risk here has the form sum_i w_i phi(theta, i) over the
// K+J coordinates: w_y = eta_y on labels and a family-specific weight on each
// expert coordinate. `risk_weights` exposes that vector.

#include <cstdint>
#include <random>
#include <span>

#include "picce/core.hpp"
#include "picce/losses.hpp"

namespace picce {

/// Experts ordered by descending score theta_{K+j}; stable, so ties keep
/// the lower index first.
std::vector<std::size_t> expert_order(std::span<const double> theta, std::size_t num_experts);

/// Weight vector of length K+J whose phi-weighted sum is the conditional risk.
Vec risk_weights(const ConditionalPoint& point, std::span<const double> theta, Family family);

double conditional_risk(const ConditionalPoint& point, std::span<const double> theta,
                        const SurrogateSpec& spec);
double conditional_risk_vanilla(const ConditionalPoint& point, std::span<const double> theta,
                                BaseLoss base);
double conditional_risk_pce(const ConditionalPoint& point, std::span<const double> theta,
                            BaseLoss base);
double conditional_risk_picce(const ConditionalPoint& point, std::span<const double> theta,
                              BaseLoss base);

/// Probability vector over the K labels followed by the J deferral options.
struct DummyDistribution {
  Vec probs;
  std::size_t num_classes = 0;

  DummyDistribution(Vec p, std::size_t k);
  std::span<const double> label_part() const { return std::span(probs).first(num_classes); }
  std::span<const double> deferral_part() const { return std::span(probs).subspan(num_classes); }
};

/// Label part eta_y / (1 + A(x)), deferral part Acc_j / (1 + A(x)), A = sum_j Acc_j.
DummyDistribution dummy_vanilla(const ConditionalPoint& point);

struct PceDummy {
  /// eta_y / (1 + Acc_top) and Acc_j / (1 + Acc_top) for every j; sums to
  /// (1 + A) / (1 + Acc_top), not to 1.
  Vec unnormalized;
  DummyDistribution normalized;
};

/// Dummy distribution with normalizer 1 + Acc of the highest-scoring expert.
PceDummy dummy_pce(const ConditionalPoint& point, std::span<const double> theta);

/// Label part eta_y / (1 + V), deferral part A^j_sigma / (1 + V), V = Pr(any expert correct).
DummyDistribution dummy_picce(const ConditionalPoint& point, std::span<const double> theta);

/// Top-1 minus top-2 mass over the label part.
double flattening_margin(const DummyDistribution& d, std::size_t num_classes);

/// One draw of (y, m) from a point's model.
struct Outcome {
  std::size_t label = 0;
  std::vector<std::size_t> expert_preds;
};

/// Label from eta, correctness pattern from the expert model, wrong labels
/// from each expert's wrong-label profile.
Outcome sample_outcome(const ConditionalPoint& point, std::mt19937_64& rng);

struct McEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
};

/// Sample mean of the surrogate over n_samples draws of (y, m).
McEstimate monte_carlo_risk(const ConditionalPoint& point, std::span<const double> theta,
                            const SurrogateSpec& spec, std::size_t n_samples, std::uint64_t seed);

}  // namespace picce
