#include <cmath>

#include "doctest.h"
#include "picce/consistency.hpp"
#include "picce/experts.hpp"
#include "picce/random.hpp"
#include "support.hpp"

using namespace picce;

TEST_CASE("fixed example table") {
  ExpertPattern pattern;
  pattern.kind = PatternKind::AppendixExample2;
  const auto pop = build_expert_population(pattern, 3, 3, 0);
  const auto p = pop.with_posterior({0.8, 0.1, 0.1});
  CHECK(expert_accuracy(p, 0) == doctest::Approx(0.80));
  CHECK(expert_accuracy(p, 1) == doctest::Approx(0.66));
  CHECK(expert_accuracy(p, 2) == doctest::Approx(0.66));
  CHECK(union_correct_prob(p) == doctest::Approx(0.986));
  const auto ref = test::example2();
  for (std::size_t y = 0; y < 3; ++y) {
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(p.experts().cond_accuracy_table()[y][j] == ref.experts().cond_accuracy_table()[y][j]);
    }
  }
  CHECK_THROWS_AS(build_expert_population(pattern, 2, 3, 0), std::invalid_argument);
}

TEST_CASE("domain experts") {
  ExpertPattern pattern;
  pattern.in_domain_accuracy = 0.85;
  pattern.family_accuracy = 0.75;
  pattern.family_size = 4;
  const auto pop = build_expert_population(pattern, 2, 6, 0);
  CHECK(pop.accuracy[0] == Vec{0.85, 0.75, 0.75, 0.75, 1.0 / 6.0, 1.0 / 6.0});
  CHECK(pop.accuracy[1] == Vec{0.75, 0.85, 0.75, 0.75, 1.0 / 6.0, 1.0 / 6.0});

  const auto cyclic = build_expert_population(pattern, 6, 6, 0);
  CHECK(cyclic.domains[4] == std::vector<std::size_t>{0});
  CHECK(cyclic.domains[5] == std::vector<std::size_t>{1});

  pattern.domain_size = 5;
  CHECK_THROWS_AS(build_expert_population(pattern, 2, 6, 0), std::invalid_argument);
  pattern.domain_size = 1;
  pattern.family_size = 7;
  CHECK_THROWS_AS(build_expert_population(pattern, 2, 6, 0), std::invalid_argument);
  pattern.family_size = 0;
  pattern.in_domain_accuracy = 1.5;
  CHECK_THROWS_AS(build_expert_population(pattern, 2, 6, 0), std::invalid_argument);
}

TEST_CASE("varying accuracy interpolates across experts") {
  ExpertPattern pattern;
  pattern.kind = PatternKind::VaryingAccuracy;
  pattern.accuracy_lo = 0.88;
  pattern.accuracy_hi = 0.94;
  const auto pop = build_expert_population(pattern, 4, 10, 0);
  const double expected[] = {0.88, 0.90, 0.92, 0.94};
  for (std::size_t j = 0; j < 4; ++j) CHECK(pop.accuracy[j][j] == doctest::Approx(expected[j]));
  pattern.accuracy_lo = 0.95;
  CHECK_THROWS_AS(build_expert_population(pattern, 4, 10, 0), std::invalid_argument);
}

TEST_CASE("overlapped domains cover the family") {
  ExpertPattern pattern;
  pattern.kind = PatternKind::OverlappedDomain;
  pattern.overlap = 1;
  const auto pop = build_expert_population(pattern, 3, 9, 0);
  std::vector<int> hits(9, 0);
  for (const auto& d : pop.domains) {
    for (std::size_t y : d) ++hits[y];
  }
  for (int h : hits) CHECK(h >= 1);
  CHECK(pop.domains[0] == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK(pop.domains[2] == std::vector<std::size_t>{6, 7, 8});
  pattern.overlap = 4;
  CHECK_THROWS_AS(build_expert_population(pattern, 3, 9, 0), std::invalid_argument);
  pattern.overlap = 0;
  CHECK_THROWS_AS(build_expert_population(pattern, 10, 9, 0), std::invalid_argument);
}

TEST_CASE("dominant patterns satisfy the information-advantage condition") {
  ExpertPattern pattern;
  pattern.kind = PatternKind::Dominant;
  const auto pop = build_expert_population(pattern, 4, 5, 0);
  const auto p = pop.with_posterior({0.2, 0.2, 0.2, 0.2, 0.2});
  const auto c = check_condition1(p);
  CHECK(c.best_expert == 0);

  pattern.kind = PatternKind::AppendixExample1;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto random_pop = build_expert_population(pattern, 3, 4, seed);
    for (std::size_t j = 1; j < 3; ++j) {
      for (std::size_t y = 0; y < 4; ++y) CHECK(random_pop.accuracy[j][y] <= random_pop.accuracy[0][y]);
    }
    CHECK(check_condition1(random_pop.with_posterior({0.1, 0.2, 0.3, 0.4})).holds);
  }
}

TEST_CASE("custom tables are validated") {
  ExpertPattern pattern;
  pattern.kind = PatternKind::Custom;
  pattern.custom_accuracy = {{0.5, 0.6}, {0.7, 0.8}};
  CHECK(build_expert_population(pattern, 2, 2, 0).accuracy == pattern.custom_accuracy);
  CHECK_THROWS_AS(build_expert_population(pattern, 3, 2, 0), std::invalid_argument);
  pattern.custom_accuracy[1][0] = -0.1;
  CHECK_THROWS_AS(build_expert_population(pattern, 2, 2, 0), std::invalid_argument);
  CHECK(parse_pattern_kind("overlapped") == PatternKind::OverlappedDomain);
  CHECK_THROWS_AS(parse_pattern_kind("nope"), std::invalid_argument);
}

TEST_CASE("sampled expert labels") {
  ExpertPattern pattern;
  pattern.kind = PatternKind::Custom;
  pattern.custom_accuracy = {{1.0, 1.0}, {0.0, 0.0}, {0.3, 0.7}};
  const auto pop = build_expert_population(pattern, 3, 2, 0);
  std::mt19937_64 rng(derive_seed(30, "test/experts/sample"));
  const std::size_t n = 100000;
  double hits = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t y = i % 2;
    const auto m = sample_expert_labels(pop, y, rng);
    CHECK(m[0] == y);
    CHECK(m[1] == 1 - y);
    if (y == 1) hits += m[2] == y ? 1.0 : 0.0;
  }
  const double half = static_cast<double>(n / 2);
  const double se = std::sqrt(0.7 * 0.3 / half);
  CHECK(std::abs(hits / half - 0.7) <= 3.0 * se);

  ExpertPattern wide;
  wide.kind = PatternKind::Custom;
  wide.custom_accuracy = {Vec(4, 0.0)};
  const auto wpop = build_expert_population(wide, 1, 4, 0);
  std::vector<double> counts(4, 0.0);
  for (std::size_t i = 0; i < 30000; ++i) counts[sample_expert_labels(wpop, 2, rng)[0]] += 1.0;
  CHECK(counts[2] == 0.0);
  const double se3 = std::sqrt((1.0 / 3.0) * (2.0 / 3.0) / 30000.0);
  for (std::size_t k : {0u, 1u, 3u}) CHECK(std::abs(counts[k] / 30000.0 - 1.0 / 3.0) <= 3.0 * se3);
  CHECK_THROWS_AS(sample_expert_labels(wpop, 4, rng), std::out_of_range);
}

TEST_CASE("best-in-set aggregation") {
  ExpertPattern pattern;
  pattern.kind = PatternKind::VaryingAccuracy;
  const auto pop = build_expert_population(pattern, 4, 6, 0);
  std::vector<ConditionalPoint> points;
  for (std::size_t y = 0; y < 6; ++y) {
    Vec eta(6, 0.0);
    eta[y] = 1.0;
    points.push_back(pop.with_posterior(eta));
  }
  const std::size_t small[] = {0};
  const std::size_t large[] = {0, 1, 2, 3};
  const auto best = aggregate_best_in_set(points, small, large);
  REQUIRE(best.size() == 6);
  for (const auto& b : best) CHECK(b.best_large >= b.best_small);
  CHECK(best[3].best_large == doctest::Approx(0.94));
  CHECK(best[3].best_small == doctest::Approx(0.75));
  const std::size_t not_subset[] = {1};
  CHECK_THROWS_AS(aggregate_best_in_set(points, large, not_subset), std::invalid_argument);
}

TEST_CASE("population JSON round trip") {
  ExpertPattern pattern;
  pattern.kind = PatternKind::OverlappedDomain;
  pattern.overlap = 1;
  const auto pop = build_expert_population(pattern, 3, 9, 0);
  const auto back = population_from_json(population_to_json(pop));
  CHECK(back.num_classes == pop.num_classes);
  CHECK(back.accuracy == pop.accuracy);
  CHECK(back.domains == pop.domains);
  auto doc = population_to_json(pop);
  doc["kind"] = "full_joint";
  CHECK_THROWS_AS(population_from_json(doc), std::invalid_argument);
  doc = population_to_json(pop);
  doc.erase("K");
  CHECK_THROWS_AS(population_from_json(doc), std::invalid_argument);
}
