#include <cmath>
#include <stdexcept>

#include "picce/random.hpp"
#include "picce/risk.hpp"

namespace picce {

Outcome sample_outcome(const ConditionalPoint& point, std::mt19937_64& rng) {
  const auto& model = point.experts();
  const std::size_t num_experts = point.num_experts();
  Outcome out;
  out.label = sample_discrete(point.posterior(), rng);
  out.expert_preds.resize(num_experts);

  std::vector<bool> correct(num_experts);
  if (model.kind() == ExpertModelKind::FullJoint) {
    const std::size_t mask = sample_discrete(model.pattern_table()[out.label], rng);
    for (std::size_t j = 0; j < num_experts; ++j) correct[j] = (mask >> j) & 1u;
  } else {
    for (std::size_t j = 0; j < num_experts; ++j) {
      correct[j] = uniform01(rng) < model.cond_accuracy(out.label, j);
    }
  }
  for (std::size_t j = 0; j < num_experts; ++j) {
    out.expert_preds[j] =
        correct[j] ? out.label : sample_discrete(model.wrong_label_dist(j, out.label), rng);
  }
  return out;
}

McEstimate monte_carlo_risk(const ConditionalPoint& point, std::span<const double> theta,
                            const SurrogateSpec& spec, std::size_t n_samples, std::uint64_t seed) {
  if (n_samples == 0) throw std::invalid_argument("monte_carlo_risk needs at least one sample");
  if (theta.size() != point.num_classes() + point.num_experts()) {
    throw std::invalid_argument("score vector length must equal K + J");
  }
  std::mt19937_64 rng(seed);
  // Welford running mean/variance.
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const auto draw = sample_outcome(point, rng);
    const double loss = surrogate(spec, theta, draw.label, draw.expert_preds);
    const double delta = loss - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (loss - mean);
  }
  McEstimate est;
  est.estimate = mean;
  if (n_samples > 1) {
    const double var = m2 / static_cast<double>(n_samples - 1);
    est.standard_error = std::sqrt(var / static_cast<double>(n_samples));
  }
  return est;
}

}  // namespace picce
