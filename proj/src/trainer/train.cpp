#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "picce/consistency.hpp"
#include "picce/random.hpp"
#include "picce/trainer.hpp"

namespace picce {

namespace {

Eigen::MatrixXd feature_matrix(const Dataset& data, std::span<const std::size_t> idx,
                               std::size_t dim) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t c = 0; c < idx.size(); ++c) {
    const auto& f = data.samples[idx[c]].features;
    if (f.size() != dim) throw std::invalid_argument("sample has the wrong feature dimension");
    for (std::size_t i = 0; i < dim; ++i) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = f[i];
    }
  }
  return x;
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

std::vector<Vec> score_vectors(const ScorerModel& model, const Dataset& data) {
  const auto idx = all_indices(data.samples.size());
  const Eigen::MatrixXd scores = model.forward(feature_matrix(data, idx, model.input_dim()));
  std::vector<Vec> out(data.samples.size());
  for (std::size_t c = 0; c < out.size(); ++c) {
    const auto col = scores.col(static_cast<Eigen::Index>(c));
    out[c].assign(col.data(), col.data() + col.size());
  }
  return out;
}

void check_dataset(const Dataset& data, std::size_t output_dim) {
  if (data.samples.empty()) throw std::invalid_argument("dataset is empty");
  if (data.num_classes + data.num_experts != output_dim) {
    throw std::invalid_argument("model output dimension must equal K + J");
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs == 0) throw std::invalid_argument("epochs must be positive");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must be in [0,1)");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be nonnegative");
}

double empirical_risk(const ScorerModel& model, const Dataset& data, const SurrogateSpec& spec) {
  check_dataset(data, model.output_dim());
  const auto scores = score_vectors(model, data);
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& s = data.samples[i];
    total += surrogate(spec, scores[i], s.label, s.expert_preds);
  }
  return total / static_cast<double>(scores.size());
}

TrainResult train(const Dataset& data, const SurrogateSpec& spec, ScorerModel model,
                  const TrainConfig& config) {
  config.validate();
  check_dataset(data, model.output_dim());
  const std::size_t n = data.samples.size();
  const std::size_t batch = std::min(config.batch_size, n);
  const std::size_t steps_per_epoch = (n + batch - 1) / batch;
  const double total_steps = static_cast<double>(steps_per_epoch * config.epochs);

  TrainResult result{model, {}, 0.0, false};
  result.initial_loss = empirical_risk(model, data, spec);

  std::vector<Eigen::MatrixXd> velocity;
  for (const auto& p : model.parameters()) velocity.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));

  std::mt19937_64 rng(derive_seed(config.seed, "shuffle"));
  auto order = all_indices(n);
  std::size_t step = 0;
  const auto out_dim = static_cast<Eigen::Index>(model.output_dim());

  for (std::size_t epoch = 0; epoch < config.epochs && !result.diverged; ++epoch) {
    // Fisher-Yates on our own uniform draws keeps the order library-independent.
    for (std::size_t i = n - 1; i > 0; --i) {
      const auto k = std::min(static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i + 1)), i);
      std::swap(order[i], order[k]);
    }
    double epoch_total = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t count = std::min(batch, n - start);
      const std::span<const std::size_t> idx(order.data() + start, count);
      const Eigen::MatrixXd inputs = feature_matrix(data, idx, model.input_dim());
      const Eigen::MatrixXd scores = model.forward(inputs);
      if (!scores.allFinite()) {
        result.diverged = true;
        break;
      }
      Eigen::MatrixXd score_grad(out_dim, static_cast<Eigen::Index>(count));
      const double inv = 1.0 / static_cast<double>(count);
      for (std::size_t c = 0; c < count; ++c) {
        const auto& s = data.samples[idx[c]];
        const auto col = scores.col(static_cast<Eigen::Index>(c));
        const std::span<const double> theta(col.data(), static_cast<std::size_t>(col.size()));
        epoch_total += surrogate(spec, theta, s.label, s.expert_preds);
        const auto g = surrogate_gradient(spec, theta, s.label, s.expert_preds);
        for (Eigen::Index r = 0; r < out_dim; ++r) {
          score_grad(r, static_cast<Eigen::Index>(c)) = g[static_cast<std::size_t>(r)] * inv;
        }
      }
      const auto grads = model.backward(inputs, score_grad);
      const double lr = config.learning_rate * 0.5 *
                        (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) / total_steps));
      auto& params = model.parameters();
      for (std::size_t p = 0; p < params.size(); ++p) {
        velocity[p] = config.momentum * velocity[p] + grads[p] + config.weight_decay * params[p];
        params[p] -= lr * velocity[p];
      }
      ++step;
    }
    const double mean_loss = epoch_total / static_cast<double>(n);
    if (result.diverged || !std::isfinite(mean_loss) || !model.finite()) {
      result.diverged = true;
      break;
    }
    result.epoch_loss.push_back(mean_loss);
  }
  result.model = std::move(model);
  return result;
}

EvalMetrics evaluate_scores(const std::vector<Vec>& scores, const Dataset& test) {
  if (test.samples.empty()) throw std::invalid_argument("test set is empty");
  if (scores.size() != test.samples.size()) throw std::invalid_argument("one score vector per sample");
  std::size_t errors = 0;
  std::size_t classified = 0;
  std::size_t classifier_hits = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& s = test.samples[i];
    const auto& theta = scores[i];
    const Decision d = prediction_link(theta, test.num_classes);
    errors += static_cast<std::size_t>(target_loss_01(d, s.label, s.expert_preds));
    if (!is_defer(d)) ++classified;
    const auto labels = std::span(theta).first(test.num_classes);
    const auto top = static_cast<std::size_t>(std::max_element(labels.begin(), labels.end()) -
                                              labels.begin());
    if (top == s.label) ++classifier_hits;
  }
  const double n = static_cast<double>(scores.size());
  return {static_cast<double>(errors) / n, static_cast<double>(classified) / n,
          static_cast<double>(classifier_hits) / n};
}

EvalMetrics evaluate(const ScorerModel& model, const Dataset& test) {
  if (test.samples.empty()) throw std::invalid_argument("test set is empty");
  check_dataset(test, model.output_dim());
  return evaluate_scores(score_vectors(model, test), test);
}

BayesCeiling bayes_system_accuracy(const SyntheticTask& task, const ExpertPopulation& population,
                                   const Dataset& test) {
  if (test.samples.empty()) throw std::invalid_argument("test set is empty");
  std::size_t hits = 0;
  for (const auto& s : test.samples) {
    const auto point = population.with_posterior(task.posterior(s.features));
    hits += 1 - static_cast<std::size_t>(target_loss_01(bayes_optimal(point), s.label, s.expert_preds));
  }
  const double n = static_cast<double>(test.samples.size());
  BayesCeiling out;
  out.accuracy = static_cast<double>(hits) / n;
  out.standard_error = std::sqrt(out.accuracy * (1.0 - out.accuracy) / n);
  return out;
}

}  // namespace picce
