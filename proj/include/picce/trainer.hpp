#pragma once

// Desk-scale end-to-end training: a Gaussian-mixture task with closed-form
// posterior, a small scorer trained by minibatch SGD with momentum on one
// surrogate, and system-level evaluation.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "picce/core.hpp"
#include "picce/experts.hpp"
#include "picce/losses.hpp"

namespace picce {

/// One spherical Gaussian component per class.
struct SyntheticTask {
  std::size_t num_classes = 10;
  std::size_t feature_dim = 2;
  Matrix means;          // [K][dim]
  double sigma = 1.0;    // shared isotropic standard deviation
  Vec priors;

  void validate() const;
  /// Class posterior eta(x): softmax of log prior + Gaussian log-likelihood.
  Vec posterior(std::span<const double> x) const;

  /// Means spread evenly on a circle of `radius` in the first two feature
  /// dimensions, uniform priors.
  static SyntheticTask ring(std::size_t num_classes, std::size_t feature_dim, double radius,
                            double sigma);
};

struct Dataset {
  std::size_t num_classes = 0;
  std::size_t num_experts = 0;
  std::vector<LabeledSample> samples;
};

/// Draws class then features, then expert predictions for that label.
Dataset sample_task(const SyntheticTask& task, std::size_t n, const ExpertPopulation& population,
                    std::uint64_t seed);

enum class Architecture { Linear, OneHiddenLayer };

std::string_view to_string(Architecture arch);
Architecture parse_architecture(std::string_view text);

/// Maps features to K+J scores. Hidden layer uses a rectifier.
class ScorerModel {
 public:
  ScorerModel(Architecture arch, std::size_t input_dim, std::size_t hidden_width,
              std::size_t output_dim, std::uint64_t seed);

  Architecture architecture() const noexcept { return arch_; }
  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t output_dim() const noexcept { return output_dim_; }

  /// Columns of `inputs` are samples; returns scores with one column per sample.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& inputs) const;
  Vec scores(std::span<const double> x) const;

  /// Parameter gradients for d(loss)/d(scores) = `score_grad`.
  std::vector<Eigen::MatrixXd> backward(const Eigen::MatrixXd& inputs,
                                        const Eigen::MatrixXd& score_grad) const;

  std::vector<Eigen::MatrixXd>& parameters() noexcept { return params_; }
  const std::vector<Eigen::MatrixXd>& parameters() const noexcept { return params_; }
  bool finite() const;

 private:
  Architecture arch_;
  std::size_t input_dim_;
  std::size_t hidden_width_;
  std::size_t output_dim_;
  // Linear: {W, b}; OneHiddenLayer: {W1, b1, W2, b2}. Biases are column vectors.
  std::vector<Eigen::MatrixXd> params_;
};

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 128;
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainResult {
  ScorerModel model;
  Vec epoch_loss;          // mean training surrogate per epoch
  double initial_loss = 0.0;  // mean surrogate before the first update
  bool diverged = false;
};

/// Mean surrogate of the model over a dataset.
double empirical_risk(const ScorerModel& model, const Dataset& data, const SurrogateSpec& spec);

/// Minibatch SGD with momentum and cosine-annealed step size.
TrainResult train(const Dataset& data, const SurrogateSpec& spec, ScorerModel model,
                  const TrainConfig& config);

struct EvalMetrics {
  double system_error = 0.0;
  double coverage = 0.0;
  double classifier_accuracy = 0.0;
};

/// Decisions through the prediction link; classifier accuracy uses the label
/// scores on every sample, deferred or not.
EvalMetrics evaluate(const ScorerModel& model, const Dataset& test);

/// Same metrics from precomputed score vectors.
EvalMetrics evaluate_scores(const std::vector<Vec>& scores, const Dataset& test);

struct BayesCeiling {
  double accuracy = 0.0;
  double standard_error = 0.0;
};

/// Accuracy of the Bayes-optimal deferral rule on the test set, using the
/// closed-form posterior and the population's accuracy model.
BayesCeiling bayes_system_accuracy(const SyntheticTask& task, const ExpertPopulation& population,
                                   const Dataset& test);

struct SweepConfig {
  std::size_t num_classes = 10;
  std::size_t feature_dim = 2;
  double ring_radius = 3.0;
  double sigma = 1.0;
  ExpertPattern pattern;
  std::vector<std::size_t> expert_counts{1, 4, 8, 16};
  std::vector<SurrogateSpec> specs{{Family::Vanilla, BaseLoss::CE}, {Family::PiCCE, BaseLoss::CE}};
  std::size_t trials = 3;
  std::size_t n_train = 20000;
  std::size_t n_test = 5000;
  Architecture architecture = Architecture::OneHiddenLayer;
  std::size_t hidden_width = 64;
  TrainConfig train;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  bool record_timing = false;
};

struct SweepRow {
  SurrogateSpec spec;
  std::size_t num_experts = 0;
  std::size_t trial = 0;
  EvalMetrics metrics;
  double train_seconds = 0.0;
  bool diverged = false;
  Vec epoch_loss;
};

struct SweepCell {
  SurrogateSpec spec;
  std::size_t num_experts = 0;
  EvalMetrics mean;
  EvalMetrics stddev;  // sample standard deviation over trials
};

/// Rows ordered by (J, spec, trial), independent of `jobs`.
std::vector<SweepRow> sweep_experts(const SweepConfig& config);
std::vector<SweepCell> summarize(const std::vector<SweepRow>& rows);

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);
void write_loss_curves_csv(const std::vector<SweepRow>& rows, const std::string& path);

}  // namespace picce
