#pragma once

// Synthetic expert populations: class-conditional accuracy rows built from
// domain-specialist patterns, and sampling of expert label predictions.

#include <cstdint>
#include <random>
#include <string_view>

#include <json.hpp>

#include "picce/core.hpp"

namespace picce {

enum class PatternKind {
  DomainExpert,      // disjoint domains (reused cyclically when J * domain_size > family)
  OverlappedDomain,  // consecutive domains share `overlap` classes, union = family
  VaryingAccuracy,   // disjoint domains, in-domain accuracy interpolated across experts
  Dominant,          // expert 0 at least as accurate as every peer on every class
  AppendixExample1,  // random dominant-expert instance, conditionally independent
  AppendixExample2,  // the fixed 3-class / 3-expert table
  Custom             // caller-supplied accuracy table
};

std::string_view to_string(PatternKind kind);
PatternKind parse_pattern_kind(std::string_view text);

struct ExpertPattern {
  PatternKind kind = PatternKind::DomainExpert;
  double in_domain_accuracy = 0.85;
  double family_accuracy = 0.75;   // in-family classes outside the expert's domain
  std::size_t domain_size = 1;
  std::size_t overlap = 0;
  double accuracy_lo = 0.88;       // VaryingAccuracy range
  double accuracy_hi = 0.94;
  std::size_t family_size = 0;     // classes [0, family_size) form the family; 0 means all K
  Matrix custom_accuracy;          // Custom: [j][y]
};

/// Per-expert class-conditional accuracies with uniform wrong-label guesses.
struct ExpertPopulation {
  std::size_t num_classes = 0;
  Matrix accuracy;                              // [j][y] = Pr(M_j = Y | Y = y)
  std::vector<std::vector<std::size_t>> domains;  // empty for patterns without domains

  std::size_t num_experts() const { return accuracy.size(); }

  /// Conditionally independent model with cond_accuracy[y][j] = accuracy[j][y].
  ExpertJointModel joint_model() const;
  ConditionalPoint with_posterior(Vec posterior) const;
};

ExpertPopulation build_expert_population(const ExpertPattern& pattern, std::size_t num_experts,
                                         std::size_t num_classes, std::uint64_t seed);

/// Each expert independently returns y with its accuracy on y, otherwise a
/// uniformly chosen wrong label.
std::vector<std::size_t> sample_expert_labels(const ExpertPopulation& population, std::size_t y,
                                              std::mt19937_64& rng);

struct BestInSet {
  double best_small = 0.0;
  double best_large = 0.0;
};

/// max_{j in E1} Acc_j(x) and max_{j in E2} Acc_j(x) per point, E1 a subset of E2.
/// Throws std::logic_error if the larger set ever scores lower.
std::vector<BestInSet> aggregate_best_in_set(std::span<const ConditionalPoint> points,
                                             std::span<const std::size_t> small_set,
                                             std::span<const std::size_t> large_set);

nlohmann::json population_to_json(const ExpertPopulation& population);
ExpertPopulation population_from_json(const nlohmann::json& doc);

}  // namespace picce
