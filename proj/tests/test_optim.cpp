#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "picce/fixture.hpp"
#include "picce/generators.hpp"
#include "picce/optim.hpp"
#include "picce/random.hpp"
#include "picce/risk.hpp"
#include "support.hpp"

using namespace picce;

namespace {

double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log(p) - (1.0 - p) * std::log(1.0 - p);
}

}  // namespace

TEST_CASE("risk_gradient matches finite differences") {
  std::mt19937_64 rng(derive_seed(10, "test/optim/fd"));
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t K = 2 + trial % 4;
    const std::size_t J = 1 + trial % 5;
    const auto kind =
        trial % 2 ? ExpertModelKind::FullJoint : ExpertModelKind::ConditionallyIndependent;
    const auto p = random_point(K, J, kind, rng);
    const auto theta = random_scores(K + J, 2.0, rng);
    for (const auto& spec : test::kAllSpecs) {
      const auto g = risk_gradient(p, theta, spec);
      const auto fd = test::finite_difference(
          [&](std::span<const double> t) { return conditional_risk(p, t, spec); }, theta);
      for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(g[i] - fd[i]) < 1e-5);
    }
  }
}

TEST_CASE("vanilla CE optimum reproduces the dummy distribution") {
  const auto p = test::example2();
  const auto d = dummy_vanilla(p);
  Vec stationary(6);
  for (std::size_t i = 0; i < 6; ++i) stationary[i] = std::log(d.probs[i]);
  const auto g = risk_gradient(p, stationary, {Family::Vanilla, BaseLoss::CE});
  for (double gi : g) CHECK(std::abs(gi) < 1e-12);

  const auto r = minimize_conditional_risk(p, {Family::Vanilla, BaseLoss::CE}, OptimizerConfig{},
                                           initial_scores(6, 1));
  REQUIRE(r.status == OptStatus::Converged);
  CHECK(r.theta[0] == 0.0);
  const auto sm = softmax(r.theta);
  for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(sm[i] - d.probs[i]) < 1e-6);
}

TEST_CASE("OvA risk separates across expert coordinates") {
  std::mt19937_64 rng(derive_seed(11, "test/optim/ova"));
  const double h = 1e-3;
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_point(3, 3, ExpertModelKind::ConditionallyIndependent, rng);
    auto theta = random_scores(6, 2.0, rng);
    const SurrogateSpec spec{Family::Vanilla, BaseLoss::OvaLog};
    auto at = [&](double da, double db) {
      Vec t = theta;
      t[3] += da;
      t[5] += db;
      return conditional_risk(p, t, spec);
    };
    const double mixed = at(h, h) - at(h, 0.0) - at(0.0, h) + at(0.0, 0.0);
    CHECK(std::abs(mixed) < 1e-13);
  }
}

TEST_CASE("descent trace is nonincreasing and deterministic") {
  const auto p = test::example2();
  for (const auto& spec : test::kAllSpecs) {
    for (bool newton : {true, false}) {
      OptimizerConfig config;
      config.newton = newton;
      const auto a = minimize_conditional_risk(p, spec, config, initial_scores(6, 7));
      const auto b = minimize_conditional_risk(p, spec, config, initial_scores(6, 7));
      CHECK(a.theta == b.theta);
      CHECK(a.iterations == b.iterations);
      for (std::size_t i = 1; i < a.trace.size(); ++i) {
        CHECK(a.trace[i].risk <= a.trace[i - 1].risk + 1e-12);
      }
      if (spec.base == BaseLoss::CE) CHECK(a.theta[0] == 0.0);
    }
  }
}

TEST_CASE("OvA optimum matches the binary-entropy risk of its region") {
  const auto p = test::example2();
  const auto r = minimize_with_restarts(p, {Family::PiCCE, BaseLoss::OvaLog}, OptimizerConfig{}, 3);
  REQUIRE(r.status == OptStatus::Converged);
  const auto order = expert_order(r.theta, 3);
  const auto w = risk_weights(p, r.theta, Family::PiCCE);
  double expected = 0.0;
  for (double wi : w) expected += binary_entropy(wi);
  CHECK(r.risk == doctest::Approx(expected).epsilon(1e-8));
  CHECK(order[0] == 0);
}

TEST_CASE("PiCCE risk has one local minimum per self-consistent ordering") {
  // Leading with expert 1 gives weights (0.32, 0.6), which keeps expert 1
  // on top, so single-start descent from that side stays there.
  const auto p = test::two_expert_point();
  OptimizerConfig config;
  for (auto base : {BaseLoss::CE, BaseLoss::OvaLog}) {
    const SurrogateSpec spec{Family::PiCCE, base};
    Vec good = initial_scores(4, 1);
    good[2] += 1.0;
    Vec bad = initial_scores(4, 1);
    bad[3] += 1.0;
    const auto rg = minimize_conditional_risk(p, spec, config, good);
    const auto rb = minimize_conditional_risk(p, spec, config, bad);
    REQUIRE(rg.status == OptStatus::Converged);
    REQUIRE(rb.status == OptStatus::Converged);
    CHECK(expert_order(rg.theta, 2)[0] == 0);
    CHECK(expert_order(rb.theta, 2)[0] == 1);
    CHECK(rb.risk > rg.risk + 0.1);
    if (base == BaseLoss::OvaLog) {
      CHECK(rg.risk == doctest::Approx(2.0 * binary_entropy(0.5) + binary_entropy(0.8) +
                                       binary_entropy(0.12)).epsilon(1e-8));
    }

    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const auto r = minimize_with_restarts(p, spec, config, seed);
      CHECK(r.status == OptStatus::Converged);
      CHECK(std::abs(r.risk - rg.risk) < 1e-9);
      CHECK(expert_order(r.theta, 2)[0] == 0);
    }
  }
}

TEST_CASE("restarts agree across seeds on random points") {
  std::mt19937_64 rng(derive_seed(12, "test/optim/restarts"));
  OptimizerConfig config;
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = random_dominant_point(3, 2 + trial % 3, rng);
    for (auto base : {BaseLoss::CE, BaseLoss::OvaLog}) {
      const SurrogateSpec spec{Family::PiCCE, base};
      const auto a = minimize_with_restarts(p, spec, config, 100);
      CHECK(a.status == OptStatus::Converged);
      for (std::uint64_t seed = 101; seed <= 104; ++seed) {
        const auto b = minimize_with_restarts(p, spec, config, seed);
        CHECK(b.status == OptStatus::Converged);
        CHECK(std::abs(a.risk - b.risk) < 1e-6);
        CHECK(expert_order(a.theta, p.num_experts())[0] ==
              expert_order(b.theta, p.num_experts())[0]);
      }
    }
  }
}

TEST_CASE("minimize_batch matches per-point restarts for any thread count") {
  std::mt19937_64 rng(derive_seed(13, "test/optim/batch"));
  std::vector<ConditionalPoint> points;
  for (int i = 0; i < 6; ++i) points.push_back(random_dominant_point(3, 3, rng));
  const SurrogateSpec spec{Family::PiCCE, BaseLoss::CE};
  OptimizerConfig config;
  const auto one = minimize_batch(points, spec, config, 42, 1);
  const auto four = minimize_batch(points, spec, config, 42, 4);
  REQUIRE(one.size() == points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    CHECK(one[i].theta == four[i].theta);
    const auto direct =
        minimize_with_restarts(points[i], spec, config, derive_seed(42, "minimize", i));
    CHECK(one[i].theta == direct.theta);
  }
}

TEST_CASE("non-convergence is reported") {
  OptimizerConfig config;
  config.max_iters = 1;
  const auto r = minimize_conditional_risk(test::example2(), {Family::PiCCE, BaseLoss::CE}, config,
                                           initial_scores(6, 1));
  CHECK(r.status == OptStatus::NonConvergence);
  CHECK(r.grad_norm > config.grad_tolerance);
}

TEST_CASE("optimizer configuration and inputs are validated") {
  OptimizerConfig bad;
  bad.step_size = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = OptimizerConfig{};
  bad.backtrack = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(minimize_conditional_risk(test::example2(), {Family::PiCCE, BaseLoss::CE},
                                            OptimizerConfig{}, Vec(5, 0.0)),
                  std::invalid_argument);

  const auto init = initial_scores(8, 5);
  CHECK(init == initial_scores(8, 5));
  for (double x : init) CHECK(std::abs(x) <= 1e-3);
}

TEST_CASE("trace CSV") {
  const auto path = std::filesystem::temp_directory_path() / "picce_trace_test.csv";
  write_trace_csv({{0, 1.5, 0.25}, {1, 1.25, 0.125}}, path.string());
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "iter,risk,grad_norm");
  std::getline(in, line);
  CHECK(line == "0,1.5,0.25");
  std::filesystem::remove(path);
}

TEST_CASE("continuity probe on the tie-crossing path") {
  const auto fx = load_path_fixture(test::source_path("fixtures/tie_crossing_path.json"));
  const auto path = linear_path(fx.from, fx.to);
  for (std::size_t n : {100u, 1000u, 10000u}) {
    const auto rep = continuity_probe(fx.label, fx.expert_preds, fx.base, path, n);
    CHECK(rep.pce.max_jump > 0.1);
    CHECK(rep.picce.max_jump <= 10.0 * rep.step);
  }
  CHECK_THROWS_AS(continuity_probe(0, fx.expert_preds, fx.base, linear_path(fx.from, fx.from), 10),
                  std::invalid_argument);
  CHECK_THROWS_AS(continuity_probe(0, fx.expert_preds, fx.base, path, 0), std::invalid_argument);
  CHECK_THROWS_AS(linear_path(Vec{0.0}, Vec{0.0, 1.0}), std::invalid_argument);
}

TEST_CASE("continuity probe on tie-free and correct-correct paths") {
  const std::size_t both_right[] = {0, 0};
  const auto swap = linear_path(Vec{0.5, 0.0, 0.0, 0.0, 2.0}, Vec{0.5, 0.0, 0.0, 2.0, 0.0});
  const auto calm = linear_path(Vec{0.5, 0.0, 0.0, 3.0, 0.0}, Vec{0.0, 0.5, 0.2, 2.0, -1.0});
  const std::size_t mixed[] = {0, 1};
  for (auto base : {BaseLoss::CE, BaseLoss::OvaLog}) {
    double prev_pce = 1e300;
    for (std::size_t n : {100u, 1000u, 10000u}) {
      const auto tie = continuity_probe(0, both_right, base, swap, n);
      CHECK(tie.pce.max_jump <= 10.0 * tie.step);
      CHECK(tie.picce.max_jump <= 10.0 * tie.step);
      const auto smooth = continuity_probe(0, mixed, base, calm, n);
      CHECK(smooth.pce.max_jump <= 10.0 * smooth.step);
      CHECK(smooth.picce.max_jump <= 10.0 * smooth.step);
      CHECK(smooth.pce.max_jump < prev_pce);
      prev_pce = smooth.pce.max_jump;
    }
  }
}
