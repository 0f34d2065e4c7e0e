#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "picce/losses.hpp"
#include "picce/random.hpp"
#include "picce/trainer.hpp"

namespace picce {

void SyntheticTask::validate() const {
  if (num_classes < 2) throw std::invalid_argument("task needs at least two classes");
  if (feature_dim == 0) throw std::invalid_argument("feature_dim must be positive");
  if (means.size() != num_classes) throw std::invalid_argument("one mean per class required");
  for (const auto& mu : means) {
    if (mu.size() != feature_dim) throw std::invalid_argument("mean has the wrong dimension");
  }
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  if (priors.size() != num_classes) throw std::invalid_argument("one prior per class required");
  const double total = std::accumulate(priors.begin(), priors.end(), 0.0);
  if (std::abs(total - 1.0) > kProbTolerance) throw std::invalid_argument("priors must sum to 1");
  for (double p : priors) {
    if (!(p > 0.0)) throw std::invalid_argument("priors must be positive");
  }
}

Vec SyntheticTask::posterior(std::span<const double> x) const {
  if (x.size() != feature_dim) throw std::invalid_argument("feature vector has the wrong dimension");
  Vec logits(num_classes);
  const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
  for (std::size_t k = 0; k < num_classes; ++k) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < feature_dim; ++i) {
      const double d = x[i] - means[k][i];
      d2 += d * d;
    }
    logits[k] = std::log(priors[k]) - d2 * inv_two_var;
  }
  return softmax(logits);
}

SyntheticTask SyntheticTask::ring(std::size_t num_classes, std::size_t feature_dim, double radius,
                                  double sigma) {
  if (feature_dim < 2) throw std::invalid_argument("ring task needs feature_dim >= 2");
  SyntheticTask task;
  task.num_classes = num_classes;
  task.feature_dim = feature_dim;
  task.sigma = sigma;
  task.priors.assign(num_classes, 1.0 / static_cast<double>(num_classes));
  task.means.assign(num_classes, Vec(feature_dim, 0.0));
  for (std::size_t k = 0; k < num_classes; ++k) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) /
                         static_cast<double>(num_classes);
    task.means[k][0] = radius * std::cos(angle);
    task.means[k][1] = radius * std::sin(angle);
  }
  task.validate();
  return task;
}

Dataset sample_task(const SyntheticTask& task, std::size_t n, const ExpertPopulation& population,
                    std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_task needs n >= 1");
  task.validate();
  if (population.num_classes != task.num_classes) {
    throw std::invalid_argument("expert population and task disagree on K");
  }
  std::mt19937_64 feature_rng(derive_seed(seed, "features"));
  std::mt19937_64 expert_rng(derive_seed(seed, "experts"));
  Dataset data;
  data.num_classes = task.num_classes;
  data.num_experts = population.num_experts();
  data.samples.resize(n);
  for (auto& s : data.samples) {
    s.label = sample_discrete(task.priors, feature_rng);
    s.features.resize(task.feature_dim);
    for (std::size_t i = 0; i < task.feature_dim; ++i) {
      s.features[i] = task.means[s.label][i] + task.sigma * standard_normal(feature_rng);
    }
    s.expert_preds = sample_expert_labels(population, s.label, expert_rng);
  }
  return data;
}

}  // namespace picce
