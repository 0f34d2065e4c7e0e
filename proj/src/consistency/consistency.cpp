#include "picce/consistency.hpp"

#include <algorithm>
#include <functional>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "picce/risk.hpp"

namespace picce {

namespace {

std::size_t argmax_lowest(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

Decision bayes_optimal(const ConditionalPoint& point) {
  const std::size_t best_label = argmax_lowest(point.posterior());
  if (point.num_experts() == 0) return Classify{best_label};
  const auto acc = expert_accuracies(point);
  const std::size_t best_expert = argmax_lowest(acc);
  if (acc[best_expert] >= point.posterior()[best_label]) return Defer{best_expert};
  return Classify{best_label};
}

Decision prediction_link(std::span<const double> theta, std::size_t num_classes) {
  if (num_classes == 0 || num_classes > theta.size()) {
    throw std::invalid_argument("label count out of range for prediction link");
  }
  const std::size_t top = argmax_lowest(theta);
  if (top < num_classes) return Classify{top};
  return Defer{top - num_classes};
}

std::string to_string(const Decision& d) {
  if (const auto* c = std::get_if<Classify>(&d)) return "classify:" + std::to_string(c->label);
  return "defer:" + std::to_string(std::get<Defer>(d).expert);
}

bool clear_of_decision_boundaries(const ConditionalPoint& point, double band) {
  Vec eta = point.posterior();
  std::partial_sort(eta.begin(), eta.begin() + 2, eta.end(), std::greater<>());
  const auto acc = expert_accuracies(point);
  const double best_acc = acc.empty() ? 0.0 : *std::max_element(acc.begin(), acc.end());
  return eta[0] - eta[1] >= band && std::abs(best_acc - eta[0]) >= band;
}

double condition1_gap(const ConditionalPoint& point, std::size_t best, std::size_t challenger,
                      std::span<const std::size_t> subset) {
  std::vector<std::size_t> with_best(subset.begin(), subset.end());
  std::vector<std::size_t> with_challenger(subset.begin(), subset.end());
  with_best.push_back(best);
  with_challenger.push_back(challenger);
  return union_correct_prob(point, with_best) - union_correct_prob(point, with_challenger);
}

Condition1Result check_condition1(const ConditionalPoint& point) {
  const std::size_t num_experts = point.num_experts();
  if (num_experts > kMaxPatternExperts) {
    throw std::invalid_argument("information-advantage enumeration supports at most 20 experts");
  }
  if (num_experts == 0) throw std::invalid_argument("information-advantage check needs at least one expert");
  Condition1Result result;
  const auto acc = expert_accuracies(point);
  result.best_expert = argmax_lowest(acc);
  const std::size_t best = result.best_expert;

  for (std::size_t challenger = 0; challenger < num_experts; ++challenger) {
    if (challenger == best) continue;
    std::vector<std::size_t> rest;
    for (std::size_t k = 0; k < num_experts; ++k) {
      if (k != best && k != challenger) rest.push_back(k);
    }
    const std::uint32_t subsets = 1u << rest.size();
    for (std::uint32_t mask = 0; mask < subsets; ++mask) {
      std::vector<std::size_t> subset;
      for (std::size_t b = 0; b < rest.size(); ++b) {
        if (mask & (1u << b)) subset.push_back(rest[b]);
      }
      const double gap = condition1_gap(point, best, challenger, subset);
      if (!(gap > 0.0)) result.violations.push_back({challenger, std::move(subset), gap});
    }
  }
  result.holds = result.violations.empty();
  return result;
}

ConsistencyReport verify_consistency(const ConditionalPoint& point, BaseLoss base,
                                     const OptimizerConfig& config, std::uint64_t seed) {
  const std::size_t num_classes = point.num_classes();
  const std::size_t num_experts = point.num_experts();
  if (num_experts == 0) throw std::invalid_argument("consistency check needs at least one expert");

  ConsistencyReport report;
  report.base = base;
  report.condition1_holds = check_condition1(point).holds;
  report.bayes_decision = bayes_optimal(point);

  const auto opt = minimize_with_restarts(point, {Family::PiCCE, base}, config, seed);
  report.converged = opt.status == OptStatus::Converged;
  report.final_grad_norm = opt.grad_norm;
  report.theta_star = opt.theta;
  const auto& theta = opt.theta;

  report.learned_decision = prediction_link(theta, num_classes);
  report.decisions_match = report.learned_decision == report.bayes_decision;

  const auto acc = expert_accuracies(point);
  const std::size_t best_expert = argmax_lowest(acc);
  const std::size_t learned_expert = argmax_lowest(std::span(theta).subspan(num_classes));
  report.argmax_expert_match = learned_expert == best_expert;

  const auto& eta = point.posterior();
  if (base == BaseLoss::CE) {
    const auto p = softmax(theta);
    const double deferral = std::accumulate(p.begin() + static_cast<std::ptrdiff_t>(num_classes),
                                            p.end(), 0.0);
    for (std::size_t y = 0; y < num_classes; ++y) {
      report.label_part_recovery_error = std::max(report.label_part_recovery_error,
                                                  std::abs(p[y] / (1.0 - deferral) - eta[y]));
    }
    const double v = union_correct_prob(point);
    report.deferral_mass_error = std::abs(deferral - v / (1.0 + v));
  } else {
    for (std::size_t y = 0; y < num_classes; ++y) {
      report.label_part_recovery_error =
          std::max(report.label_part_recovery_error, std::abs(sigmoid(theta[y]) - eta[y]));
    }
    report.expert_accuracy_recovery_error =
        std::abs(sigmoid(theta[num_classes + best_expert]) - acc[best_expert]);
  }
  return report;
}

std::string_view to_string(Theorem2AForm form) {
  switch (form) {
    case Theorem2AForm::AccTimesV: return "acc_times_vtilde";
    case Theorem2AForm::AccTimesOneMinusV: return "acc_times_one_minus_vtilde";
    case Theorem2AForm::Neither: return "neither";
  }
  return "?";
}

Theorem2AResolution resolve_theorem2a_form(const ConditionalPoint& point,
                                           const OptimizerConfig& config, double tolerance,
                                           std::uint64_t seed) {
  const std::size_t num_classes = point.num_classes();
  const std::size_t num_experts = point.num_experts();
  if (num_experts == 0) throw std::invalid_argument("resolution needs at least one expert");

  const auto opt = minimize_with_restarts(point, {Family::PiCCE, BaseLoss::CE}, config, seed);
  const auto acc = expert_accuracies(point);
  const std::size_t best = argmax_lowest(acc);
  const double v = union_correct_prob(point);
  const double v_tilde = v / (1.0 + v);

  Theorem2AResolution res;
  res.converged = opt.status == OptStatus::Converged;
  res.u_star = softmax(opt.theta)[num_classes + best];
  res.candidate_a = acc[best] * v_tilde;
  res.candidate_b = acc[best] * (1.0 - v_tilde);
  res.error_a = std::abs(res.u_star - res.candidate_a);
  res.error_b = std::abs(res.u_star - res.candidate_b);
  const bool a_ok = res.error_a < tolerance;
  const bool b_ok = res.error_b < tolerance;
  if (a_ok || b_ok) {
    res.winner = res.error_a <= res.error_b ? Theorem2AForm::AccTimesV
                                            : Theorem2AForm::AccTimesOneMinusV;
  }
  res.inconsistent = std::min(res.error_a, res.error_b) >= 10.0 * tolerance;
  return res;
}

}  // namespace picce
