#include <chrono>
#include <cmath>

#include "picce/csv.hpp"
#include "picce/parallel.hpp"
#include "picce/random.hpp"
#include "picce/trainer.hpp"

namespace picce {

namespace {

struct CellKey {
  std::size_t j_index;
  std::size_t spec_index;
  std::size_t trial;
};

SweepRow run_cell(const SweepConfig& config, const SyntheticTask& task, const CellKey& key) {
  const std::size_t num_experts = config.expert_counts[key.j_index];
  const SurrogateSpec spec = config.specs[key.spec_index];
  const auto population = build_expert_population(config.pattern, num_experts, config.num_classes,
                                                  derive_seed(config.seed, "population"));
  const auto train_set =
      sample_task(task, config.n_train, population, derive_seed(config.seed, "train-data", key.trial));
  const auto test_set =
      sample_task(task, config.n_test, population, derive_seed(config.seed, "test-data", key.trial));

  // Init and shuffling seeds depend on the trial only.
  ScorerModel model(config.architecture, config.feature_dim, config.hidden_width,
                    config.num_classes + num_experts, derive_seed(config.seed, "init", key.trial));
  TrainConfig train_config = config.train;
  train_config.seed = derive_seed(config.seed, "sgd", key.trial);

  const auto start = std::chrono::steady_clock::now();
  auto trained = train(train_set, spec, std::move(model), train_config);
  const auto stop = std::chrono::steady_clock::now();

  SweepRow row;
  row.spec = spec;
  row.num_experts = num_experts;
  row.trial = key.trial;
  row.diverged = trained.diverged;
  row.epoch_loss = std::move(trained.epoch_loss);
  if (!trained.diverged) row.metrics = evaluate(trained.model, test_set);
  if (config.record_timing) row.train_seconds = std::chrono::duration<double>(stop - start).count();
  return row;
}

}  // namespace

std::vector<SweepRow> sweep_experts(const SweepConfig& config) {
  if (config.expert_counts.empty() || config.specs.empty() || config.trials == 0) {
    throw std::invalid_argument("sweep needs expert counts, surrogate specs and trials");
  }
  config.train.validate();
  const auto task = SyntheticTask::ring(config.num_classes, config.feature_dim, config.ring_radius,
                                        config.sigma);
  std::vector<CellKey> keys;
  for (std::size_t j = 0; j < config.expert_counts.size(); ++j) {
    for (std::size_t s = 0; s < config.specs.size(); ++s) {
      for (std::size_t t = 0; t < config.trials; ++t) keys.push_back({j, s, t});
    }
  }
  std::vector<SweepRow> rows(keys.size());
  parallel_for(keys.size(), config.jobs, [&](std::size_t i) { rows[i] = run_cell(config, task, keys[i]); });
  return rows;
}

std::vector<SweepCell> summarize(const std::vector<SweepRow>& rows) {
  std::vector<SweepCell> cells;
  std::vector<std::vector<const SweepRow*>> members;
  for (const auto& row : rows) {
    std::size_t c = 0;
    while (c < cells.size() && !(cells[c].spec == row.spec && cells[c].num_experts == row.num_experts)) ++c;
    if (c == cells.size()) {
      cells.push_back({row.spec, row.num_experts, {}, {}});
      members.emplace_back();
    }
    members[c].push_back(&row);
  }
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto& group = members[c];
    const double n = static_cast<double>(group.size());
    auto mean_of = [&](auto field) {
      double s = 0.0;
      for (const auto* r : group) s += r->metrics.*field;
      return s / n;
    };
    auto std_of = [&](auto field, double mean) {
      if (group.size() < 2) return 0.0;
      double s = 0.0;
      for (const auto* r : group) s += (r->metrics.*field - mean) * (r->metrics.*field - mean);
      return std::sqrt(s / (n - 1.0));
    };
    auto& cell = cells[c];
    cell.mean.system_error = mean_of(&EvalMetrics::system_error);
    cell.mean.coverage = mean_of(&EvalMetrics::coverage);
    cell.mean.classifier_accuracy = mean_of(&EvalMetrics::classifier_accuracy);
    cell.stddev.system_error = std_of(&EvalMetrics::system_error, cell.mean.system_error);
    cell.stddev.coverage = std_of(&EvalMetrics::coverage, cell.mean.coverage);
    cell.stddev.classifier_accuracy =
        std_of(&EvalMetrics::classifier_accuracy, cell.mean.classifier_accuracy);
  }
  return cells;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  CsvWriter csv(path, {"family", "base", "J", "trial", "system_error", "coverage",
                       "classifier_accuracy", "train_seconds"});
  for (const auto& r : rows) {
    csv.row({std::string(to_string(r.spec.family)), std::string(to_string(r.spec.base)),
             std::to_string(r.num_experts), std::to_string(r.trial),
             format_double(r.metrics.system_error), format_double(r.metrics.coverage),
             format_double(r.metrics.classifier_accuracy), format_double(r.train_seconds)});
  }
}

void write_loss_curves_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  CsvWriter csv(path, {"family", "base", "J", "trial", "epoch", "loss"});
  for (const auto& r : rows) {
    for (std::size_t e = 0; e < r.epoch_loss.size(); ++e) {
      csv.row({std::string(to_string(r.spec.family)), std::string(to_string(r.spec.base)),
               std::to_string(r.num_experts), std::to_string(r.trial), std::to_string(e + 1),
               format_double(r.epoch_loss[e])});
    }
  }
}

}  // namespace picce
