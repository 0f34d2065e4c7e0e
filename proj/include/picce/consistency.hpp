#pragma once

// Bayes-optimal deferral, the score-to-decision link, information-advantage checking by
// subset enumeration, and end-to-end recovery checks of the PiCCE optimum.

#include <string>
#include <vector>

#include "picce/core.hpp"
#include "picce/losses.hpp"
#include "picce/optim.hpp"

namespace picce {

/// Defer to the most accurate expert j* iff Acc_{j*} >= max_y eta_y, else
/// classify as argmax eta. Lowest index wins all ties.
Decision bayes_optimal(const ConditionalPoint& point);

/// Global argmax of theta: a label coordinate classifies, coordinate K + j
/// defers to expert j. Lowest index wins ties.
Decision prediction_link(std::span<const double> theta, std::size_t num_classes);

std::string to_string(const Decision& d);

/// True when the top label leads the runner-up by at least `band` and the best
/// expert accuracy differs from the top posterior by at least `band`.
bool clear_of_decision_boundaries(const ConditionalPoint& point, double band);

struct Condition1Violation {
  std::size_t expert = 0;             // the challenger j != j*
  std::vector<std::size_t> subset;    // M'
  double gap = 0.0;                   // Pr(C_{M' + j*}) - Pr(C_{M' + j}), <= 0 here
};

struct Condition1Result {
  bool holds = false;
  std::size_t best_expert = 0;        // lowest-index accuracy argmax
  std::vector<Condition1Violation> violations;
};

/// Pr(C_{M' + j*}) - Pr(C_{M' + j}).
double condition1_gap(const ConditionalPoint& point, std::size_t best, std::size_t challenger,
                      std::span<const std::size_t> subset);

/// Enumerates every challenger j != j* and every M' of the remaining experts.
/// A tied accuracy argmax shows up as a violation with M' empty.
Condition1Result check_condition1(const ConditionalPoint& point);

struct ConsistencyReport {
  BaseLoss base = BaseLoss::CE;
  Decision bayes_decision = Classify{0};
  Decision learned_decision = Classify{0};
  bool decisions_match = false;
  double label_part_recovery_error = 0.0;       // max_y |estimate_y - eta_y|
  double expert_accuracy_recovery_error = 0.0;  // OvA: |s(theta_{K+j*}) - Acc_{j*}|
  double deferral_mass_error = 0.0;             // CE: |sum_j u_j - V/(1+V)|
  bool argmax_expert_match = false;
  bool condition1_holds = false;
  bool converged = false;
  double final_grad_norm = 0.0;
  Vec theta_star;
};

/// Minimizes the PiCCE risk at the point and compares the linked decision and
/// the recovered probabilities with their population targets.
ConsistencyReport verify_consistency(const ConditionalPoint& point, BaseLoss base,
                                     const OptimizerConfig& config, std::uint64_t seed = 0);

enum class Theorem2AForm { AccTimesV, AccTimesOneMinusV, Neither };

std::string_view to_string(Theorem2AForm form);

struct Theorem2AResolution {
  double u_star = 0.0;          // softmax(theta*)_{K+j*}
  double candidate_a = 0.0;     // Acc_{j*} * V/(1+V)
  double candidate_b = 0.0;     // Acc_{j*} * (1 - V/(1+V))
  double error_a = 0.0;
  double error_b = 0.0;
  Theorem2AForm winner = Theorem2AForm::Neither;
  bool inconsistent = false;    // neither form within 10x the tolerance
  bool converged = false;
};

/// Decides numerically which closed form the optimal deferral mass of j*
/// follows under PiCCE-CE.
Theorem2AResolution resolve_theorem2a_form(const ConditionalPoint& point,
                                           const OptimizerConfig& config,
                                           double tolerance = 1e-3, std::uint64_t seed = 0);

}  // namespace picce
