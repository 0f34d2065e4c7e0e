#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "picce/generators.hpp"
#include "picce/random.hpp"
#include "picce/trainer.hpp"
#include "support.hpp"
#include "trainer_support.hpp"

using namespace picce;

namespace {

ExpertPopulation flat_population(std::size_t num_experts, std::size_t num_classes, double acc) {
  ExpertPattern pattern;
  pattern.kind = PatternKind::Custom;
  pattern.custom_accuracy.assign(num_experts, Vec(num_classes, acc));
  return build_expert_population(pattern, num_experts, num_classes, 0);
}

SyntheticTask two_blobs() {
  SyntheticTask task;
  task.num_classes = 2;
  task.feature_dim = 2;
  task.means = {{-1.0, 0.0}, {1.0, 0.0}};
  task.sigma = 1.0;
  task.priors = {0.5, 0.5};
  return task;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("task posterior") {
  const auto task = two_blobs();
  const auto mid = task.posterior(Vec{0.0, 0.0});
  CHECK(mid[0] == doctest::Approx(0.5));
  const auto right = task.posterior(Vec{1.0, 0.0});
  CHECK(right[1] == doctest::Approx(sigmoid(2.0)).epsilon(1e-14));
  CHECK(right[0] + right[1] == doctest::Approx(1.0));
  CHECK_THROWS_AS(task.posterior(Vec{1.0}), std::invalid_argument);

  const auto ring = SyntheticTask::ring(10, 3, 3.0, 1.0);
  std::mt19937_64 rng(derive_seed(40, "test/trainer/post"));
  for (int i = 0; i < 50; ++i) {
    const auto eta = ring.posterior(random_scores(3, 5.0, rng));
    double total = 0.0;
    for (double e : eta) total += e;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
  auto bad = two_blobs();
  bad.priors = {0.6, 0.6};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(SyntheticTask::ring(4, 1, 3.0, 1.0), std::invalid_argument);
}

TEST_CASE("sample_task") {
  const auto task = SyntheticTask::ring(4, 2, 3.0, 1.0);
  const auto pop = flat_population(2, 4, 0.7);
  CHECK_THROWS_AS(sample_task(task, 0, pop, 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_task(task, 10, flat_population(2, 5, 0.7), 1), std::invalid_argument);

  const std::size_t n = 40000;
  const auto data = sample_task(task, n, pop, 1);
  CHECK(data.num_classes == 4);
  CHECK(data.num_experts == 2);
  REQUIRE(data.samples.size() == n);
  std::vector<double> counts(4, 0.0);
  double expert_hits = 0.0;
  for (const auto& s : data.samples) {
    counts[s.label] += 1.0;
    expert_hits += s.expert_preds[0] == s.label ? 1.0 : 0.0;
  }
  const double se = std::sqrt(0.25 * 0.75 / static_cast<double>(n));
  for (double c : counts) CHECK(std::abs(c / static_cast<double>(n) - 0.25) <= 3.0 * se);
  const double se_e = std::sqrt(0.7 * 0.3 / static_cast<double>(n));
  CHECK(std::abs(expert_hits / static_cast<double>(n) - 0.7) <= 3.0 * se_e);

  const auto again = sample_task(task, 100, pop, 1);
  for (std::size_t i = 0; i < 100; ++i) {
    CHECK(again.samples[i].features == data.samples[i].features);
    CHECK(again.samples[i].expert_preds == data.samples[i].expert_preds);
  }
}

TEST_CASE("backpropagation matches finite differences") {
  const auto task = SyntheticTask::ring(4, 3, 3.0, 1.0);
  const auto pop = flat_population(3, 4, 0.6);
  const auto batch = sample_task(task, 8, pop, 5);
  for (auto arch : {Architecture::Linear, Architecture::OneHiddenLayer}) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const ScorerModel model(arch, 3, 6, 7, seed);
      for (const auto& spec : test::kAllSpecs) {
        const auto [analytic, numeric] = test::backprop_and_fd(model, batch, spec);
        CHECK(test::relative_error(analytic, numeric) < 1e-4);
      }
    }
  }
}

TEST_CASE("scorer and training configuration are validated") {
  CHECK_THROWS_AS(ScorerModel(Architecture::OneHiddenLayer, 2, 0, 3, 0), std::invalid_argument);
  CHECK_THROWS_AS(ScorerModel(Architecture::Linear, 0, 4, 3, 0), std::invalid_argument);
  CHECK(parse_architecture(to_string(Architecture::Linear)) == Architecture::Linear);
  CHECK_THROWS_AS(parse_architecture("cnn"), std::invalid_argument);
  TrainConfig config;
  config.epochs = 0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config = TrainConfig{};
  config.learning_rate = -1.0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);

  const auto task = SyntheticTask::ring(4, 2, 3.0, 1.0);
  const auto data = sample_task(task, 10, flat_population(1, 4, 0.5), 1);
  CHECK_THROWS_AS(train(data, {}, ScorerModel(Architecture::Linear, 2, 1, 4, 0), TrainConfig{}),
                  std::invalid_argument);
}

TEST_CASE("training lowers the surrogate and is deterministic") {
  const auto task = SyntheticTask::ring(4, 2, 3.0, 1.0);
  const auto pop = flat_population(2, 4, 0.6);
  const auto data = sample_task(task, 2000, pop, 3);
  TrainConfig config;
  config.epochs = 5;
  config.seed = 9;
  for (const auto& spec : test::kAllSpecs) {
    const ScorerModel init(Architecture::OneHiddenLayer, 2, 16, 6, 4);
    const auto a = train(data, spec, init, config);
    const auto b = train(data, spec, init, config);
    CHECK_FALSE(a.diverged);
    REQUIRE(a.epoch_loss.size() == 5);
    CHECK(a.epoch_loss.back() < a.initial_loss);
    CHECK(empirical_risk(a.model, data, spec) < a.initial_loss);
    CHECK(a.epoch_loss == b.epoch_loss);
    CHECK(a.model.parameters()[0] == b.model.parameters()[0]);
  }
}

TEST_CASE("with one expert PiCCE and vanilla training coincide") {
  const auto task = SyntheticTask::ring(4, 2, 3.0, 1.0);
  const auto data = sample_task(task, 1000, flat_population(1, 4, 0.7), 3);
  TrainConfig config;
  config.epochs = 3;
  for (auto base : {BaseLoss::CE, BaseLoss::OvaLog}) {
    const ScorerModel init(Architecture::OneHiddenLayer, 2, 8, 5, 4);
    const auto v = train(data, {Family::Vanilla, base}, init, config);
    const auto p = train(data, {Family::PiCCE, base}, init, config);
    CHECK(v.epoch_loss == p.epoch_loss);
  }
}

TEST_CASE("a perfect expert absorbs the hard samples") {
  const auto task = SyntheticTask::ring(4, 2, 1.5, 1.0);
  const auto pop = flat_population(1, 4, 1.0);
  const auto train_set = sample_task(task, 4000, pop, 11);
  const auto test_set = sample_task(task, 2000, pop, 12);
  TrainConfig config;
  config.epochs = 10;
  const auto r = train(train_set, {Family::PiCCE, BaseLoss::CE},
                       ScorerModel(Architecture::OneHiddenLayer, 2, 16, 5, 1), config);
  const auto m = evaluate(r.model, test_set);
  CHECK(m.system_error < 0.05);
  CHECK(m.coverage < 0.5);
  const auto ceiling = bayes_system_accuracy(task, pop, test_set);
  CHECK(ceiling.accuracy == 1.0);
  CHECK(ceiling.standard_error == 0.0);
}

TEST_CASE("evaluate_scores on a hand-built set") {
  Dataset data;
  data.num_classes = 2;
  data.num_experts = 1;
  data.samples = {
      {{0.0}, 0, {0}},  // classify 0: correct
      {{0.0}, 1, {1}},  // classify 0: wrong
      {{0.0}, 1, {1}},  // defer: expert right
      {{0.0}, 0, {1}},  // defer: expert wrong, label scores say 0
      {{0.0}, 1, {0}},  // classify 1: correct
  };
  const std::vector<Vec> scores = {
      {2.0, 0.0, 1.0}, {2.0, 0.0, 1.0}, {0.0, 1.0, 3.0}, {1.0, 0.0, 3.0}, {0.0, 2.0, 1.0}};
  const auto m = evaluate_scores(scores, data);
  CHECK(m.system_error == doctest::Approx(2.0 / 5.0));
  CHECK(m.coverage == doctest::Approx(3.0 / 5.0));
  CHECK(m.classifier_accuracy == doctest::Approx(4.0 / 5.0));
  CHECK_THROWS_AS(evaluate_scores({}, data), std::invalid_argument);
}

TEST_CASE("Bayes ceiling bounds a trained model") {
  const auto task = SyntheticTask::ring(6, 2, 3.0, 1.0);
  const auto pop = flat_population(2, 6, 0.7);
  const auto train_set = sample_task(task, 5000, pop, 21);
  const auto test_set = sample_task(task, 3000, pop, 22);
  TrainConfig config;
  config.epochs = 10;
  const auto r = train(train_set, {Family::PiCCE, BaseLoss::CE},
                       ScorerModel(Architecture::OneHiddenLayer, 2, 32, 8, 2), config);
  const auto m = evaluate(r.model, test_set);
  const auto ceiling = bayes_system_accuracy(task, pop, test_set);
  CHECK(ceiling.accuracy > 0.7);
  CHECK(1.0 - m.system_error <= ceiling.accuracy + 3.0 * ceiling.standard_error);
}

TEST_CASE("expert sweep") {
  SweepConfig config;
  config.num_classes = 4;
  config.expert_counts = {1, 2};
  config.trials = 2;
  config.n_train = 400;
  config.n_test = 200;
  config.hidden_width = 8;
  config.train.epochs = 2;
  config.seed = 5;
  const auto rows = sweep_experts(config);
  REQUIRE(rows.size() == 2 * 2 * 2);
  CHECK(rows[0].num_experts == 1);
  CHECK(rows[0].spec == SurrogateSpec{Family::Vanilla, BaseLoss::CE});
  CHECK(rows[1].trial == 1);
  CHECK(rows[7].num_experts == 2);
  CHECK(rows[7].spec == SurrogateSpec{Family::PiCCE, BaseLoss::CE});
  for (const auto& r : rows) CHECK(r.train_seconds == 0.0);

  config.jobs = 3;
  const auto parallel = sweep_experts(config);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(parallel[i].epoch_loss == rows[i].epoch_loss);
    CHECK(parallel[i].metrics.system_error == rows[i].metrics.system_error);
  }

  const auto cells = summarize(rows);
  REQUIRE(cells.size() == 4);
  CHECK(cells[0].mean.system_error ==
        doctest::Approx((rows[0].metrics.system_error + rows[1].metrics.system_error) / 2.0));

  const auto dir = std::filesystem::temp_directory_path() / "picce_sweep_test";
  std::filesystem::create_directories(dir);
  write_sweep_csv(rows, (dir / "a.csv").string());
  write_sweep_csv(parallel, (dir / "b.csv").string());
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
  CHECK(slurp(dir / "a.csv").rfind("family,base,J,trial,system_error", 0) == 0);
  write_loss_curves_csv(rows, (dir / "c.csv").string());
  std::ifstream curves(dir / "c.csv");
  std::size_t lines = 0;
  for (std::string line; std::getline(curves, line);) ++lines;
  CHECK(lines == 1 + rows.size() * 2);
  std::filesystem::remove_all(dir);

  config.trials = 0;
  CHECK_THROWS_AS(sweep_experts(config), std::invalid_argument);
}
