#include <cmath>

#include "doctest.h"
#include "picce/consistency.hpp"
#include "picce/fixture.hpp"
#include "picce/generators.hpp"
#include "picce/random.hpp"
#include "picce/risk.hpp"
#include "support.hpp"

using namespace picce;

TEST_CASE("bayes_optimal") {
  CHECK(bayes_optimal(test::example2()) == Decision{Defer{0}});

  Matrix weak{{0.5, 0.4}, {0.5, 0.4}, {0.5, 0.4}};
  const ConditionalPoint sure({1.0, 0.0, 0.0}, ExpertJointModel::independent(3, weak));
  CHECK(bayes_optimal(sure) == Decision{Classify{0}});

  Matrix tied{{0.9, 0.9}, {0.9, 0.9}};
  const ConditionalPoint twins({0.5, 0.5}, ExpertJointModel::independent(2, tied));
  CHECK(bayes_optimal(twins) == Decision{Defer{0}});

  const ConditionalPoint none({0.2, 0.8}, ExpertJointModel::independent(2, Matrix(2)));
  CHECK(bayes_optimal(none) == Decision{Classify{1}});
}

TEST_CASE("prediction_link") {
  CHECK(prediction_link(Vec{0.0, 1.0, 3.0, 2.0}, 2) == Decision{Defer{0}});
  CHECK(prediction_link(Vec{0.0, 4.0, 3.0, 2.0}, 2) == Decision{Classify{1}});
  CHECK(prediction_link(Vec{1.0, 1.0, 1.0}, 2) == Decision{Classify{0}});
  CHECK(prediction_link(Vec{0.0, 0.0, 2.0, 2.0}, 2) == Decision{Defer{0}});
  CHECK(to_string(Decision{Defer{3}}) != to_string(Decision{Classify{3}}));
}

TEST_CASE("the information-advantage condition on the fixed 3x3 example") {
  const auto p = test::example2();
  const std::size_t subset[] = {2};
  CHECK(condition1_gap(p, 0, 1, subset) == doctest::Approx(0.086).epsilon(1e-12));
  const auto r = check_condition1(p);
  CHECK(r.holds);
  CHECK(r.best_expert == 0);
  CHECK(r.violations.empty());
}

TEST_CASE("the information-advantage condition fails for identical experts") {
  const auto p = load_point(test::source_path("fixtures/identical_experts.json"));
  const auto r = check_condition1(p);
  CHECK_FALSE(r.holds);
  REQUIRE_FALSE(r.violations.empty());
  for (const auto& v : r.violations) {
    CHECK(v.gap <= 0.0);
    CHECK(v.expert != r.best_expert);
  }
  CHECK(r.violations.front().subset.empty());
}

TEST_CASE("dominant random points satisfy the information-advantage condition") {
  std::mt19937_64 rng(derive_seed(20, "test/consistency/dominant"));
  for (int i = 0; i < 200; ++i) {
    const auto p = random_dominant_point(2 + i % 4, 1 + i % 6, rng);
    CHECK(check_condition1(p).holds);
  }
}

TEST_CASE("verify_consistency on the fixed 3x3 example") {
  const auto p = test::example2();
  const double V = 0.986;
  for (auto base : {BaseLoss::CE, BaseLoss::OvaLog}) {
    const auto rep = verify_consistency(p, base, OptimizerConfig{}, 1);
    CHECK(rep.converged);
    CHECK(rep.condition1_holds);
    CHECK(rep.bayes_decision == Decision{Defer{0}});
    CHECK(rep.argmax_expert_match);
    CHECK(rep.label_part_recovery_error < 1e-3);
    if (base == BaseLoss::OvaLog) {
      CHECK(rep.expert_accuracy_recovery_error < 1e-3);
      CHECK(sigmoid(rep.theta_star[3]) == doctest::Approx(0.8).epsilon(1e-4));
    } else {
      CHECK(rep.deferral_mass_error < 1e-3);
      const auto sm = softmax(rep.theta_star);
      CHECK(sm[0] == doctest::Approx(0.8 / (1.0 + V)).epsilon(1e-4));
    }
  }
}

TEST_CASE("verify_consistency on decisive points") {
  Matrix weak{{0.5, 0.4}, {0.5, 0.4}, {0.5, 0.4}};
  const ConditionalPoint sure({1.0, 0.0, 0.0}, ExpertJointModel::independent(3, weak));
  Matrix strong{{0.95, 0.5}, {0.9, 0.6}, {0.9, 0.5}};
  const ConditionalPoint hard({0.4, 0.3, 0.3}, ExpertJointModel::independent(3, strong));
  for (auto base : {BaseLoss::CE, BaseLoss::OvaLog}) {
    const auto a = verify_consistency(sure, base, OptimizerConfig{}, 2);
    CHECK(a.converged);
    CHECK(a.learned_decision == Decision{Classify{0}});
    CHECK(a.decisions_match);
    const auto b = verify_consistency(hard, base, OptimizerConfig{}, 2);
    CHECK(b.converged);
    CHECK(b.learned_decision == Decision{Defer{0}});
    CHECK(b.decisions_match);
    CHECK(b.label_part_recovery_error < 1e-3);
  }
}

TEST_CASE("deferral-mass form on the fixed 3x3 example") {
  const auto r = resolve_theorem2a_form(test::example2(), OptimizerConfig{}, 1e-3, 1);
  CHECK(r.converged);
  CHECK(r.candidate_a == doctest::Approx(0.8 * 0.986 / 1.986).epsilon(1e-12));
  CHECK(r.candidate_b == doctest::Approx(0.8 / 1.986).epsilon(1e-12));
  CHECK(std::abs(r.candidate_a - 0.39718) < 1e-5);
  CHECK(std::abs(r.candidate_b - 0.40282) < 1e-5);
  CHECK(r.u_star == doctest::Approx(r.candidate_b).epsilon(1e-5));
  CHECK(r.winner == Theorem2AForm::AccTimesOneMinusV);
  CHECK_FALSE(r.inconsistent);
  CHECK(to_string(r.winner) == "acc_times_one_minus_vtilde");
}

TEST_CASE("deferral-mass candidates coincide when V = 1") {
  Matrix perfect{{1.0, 0.5}, {1.0, 0.5}};
  const ConditionalPoint p({0.6, 0.4}, ExpertJointModel::independent(2, perfect));
  const auto r = resolve_theorem2a_form(p, OptimizerConfig{}, 1e-3, 1);
  CHECK(r.candidate_a == doctest::Approx(r.candidate_b));
  CHECK(r.u_star == doctest::Approx(0.5).epsilon(1e-4));
  CHECK_FALSE(r.inconsistent);
}

TEST_CASE("deferral-mass form with a single expert") {
  Matrix one{{0.9}, {0.7}};
  const ConditionalPoint p({0.5, 0.5}, ExpertJointModel::independent(2, one));
  const auto r = resolve_theorem2a_form(p, OptimizerConfig{}, 1e-3, 1);
  const double V = 0.8;
  CHECK(r.u_star == doctest::Approx(V / (1.0 + V)).epsilon(1e-4));
  CHECK(r.winner == Theorem2AForm::AccTimesOneMinusV);
}

TEST_CASE("decision boundary band") {
  CHECK_FALSE(clear_of_decision_boundaries(test::example2(), 0.02));
  Matrix strong{{0.95, 0.5}, {0.9, 0.6}, {0.9, 0.5}};
  const ConditionalPoint hard({0.4, 0.3, 0.3}, ExpertJointModel::independent(3, strong));
  CHECK(clear_of_decision_boundaries(hard, 0.02));
  const ConditionalPoint tied({0.45, 0.45, 0.1}, ExpertJointModel::independent(3, strong));
  CHECK_FALSE(clear_of_decision_boundaries(tied, 0.02));
}
