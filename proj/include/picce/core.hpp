#pragma once

// Pointwise probabilistic model of one input x: class posterior eta(x) and
// the joint correctness behaviour of J experts given the true label.
//
// Indexing is 0-based throughout: labels in [0, K), experts in [0, J),
// expert j's score lives at coordinate K + j of a score vector.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

namespace picce {

using Vec = std::vector<double>;
using Matrix = std::vector<Vec>;

/// Tolerance used when validating user-supplied probabilities.
inline constexpr double kProbTolerance = 1e-9;

/// Largest J for which the pattern table of a FullJoint model is materialized.
inline constexpr std::size_t kMaxPatternExperts = 20;

enum class ExpertModelKind { ConditionallyIndependent, FullJoint };

/// Conditional distribution of the experts' predictions given the true label.
///
/// Correctness is described either per expert (conditionally independent) or
/// by an explicit table over correctness bit patterns b in {0,1}^J, where bit j
/// set means expert j predicts the true label. When an expert errs, its
/// predicted label is drawn from `wrong_label_dist(j, y)`.
class ExpertJointModel {
 public:
  /// `cond_accuracy[y][j]` = Pr(M_j = Y | Y = y). `wrong_profile`, when
  /// non-empty, is indexed [j][y][label] and must put zero mass on y.
  static ExpertJointModel independent(std::size_t num_classes, Matrix cond_accuracy,
                                      std::vector<Matrix> wrong_profile = {});

  /// `pattern_probs[y][mask]` = Pr(correctness pattern = mask | Y = y), with
  /// 2^J entries per label.
  static ExpertJointModel full_joint(std::size_t num_classes, std::size_t num_experts,
                                     Matrix pattern_probs,
                                     std::vector<Matrix> wrong_profile = {});

  ExpertModelKind kind() const noexcept { return kind_; }
  std::size_t num_classes() const noexcept { return num_classes_; }
  std::size_t num_experts() const noexcept { return num_experts_; }

  /// Pr(M_j = Y | Y = y).
  double cond_accuracy(std::size_t y, std::size_t j) const;

  /// Pr(pattern = mask | Y = y). Requires J <= kMaxPatternExperts.
  double pattern_prob(std::size_t y, std::uint32_t mask) const;

  /// Pr(some expert in `subset` is correct | Y = y).
  double union_correct_given(std::size_t y, std::span<const std::size_t> subset) const;

  /// Pr(every expert in `wrong` errs and expert j is correct | Y = y).
  double exclusive_correct_given(std::size_t y, std::span<const std::size_t> wrong,
                                 std::size_t j) const;

  /// Distribution over predicted labels when expert j errs on true label y.
  Vec wrong_label_dist(std::size_t j, std::size_t y) const;

  bool has_custom_wrong_profile() const noexcept { return !wrong_profile_.empty(); }
  const std::vector<Matrix>& wrong_profile() const noexcept { return wrong_profile_; }
  const Matrix& cond_accuracy_table() const noexcept { return cond_accuracy_; }
  const Matrix& pattern_table() const noexcept { return patterns_; }

 private:
  ExpertJointModel() = default;
  void validate_wrong_profile() const;

  ExpertModelKind kind_ = ExpertModelKind::ConditionallyIndependent;
  std::size_t num_classes_ = 0;
  std::size_t num_experts_ = 0;
  Matrix cond_accuracy_;  // [y][j], always populated (marginals for FullJoint)
  Matrix patterns_;       // [y][mask], FullJoint only
  std::vector<Matrix> wrong_profile_;
};

/// Everything the pointwise theory needs about one input x.
class ConditionalPoint {
 public:
  ConditionalPoint(Vec class_posterior, ExpertJointModel experts);

  std::size_t num_classes() const noexcept { return posterior_.size(); }
  std::size_t num_experts() const noexcept { return experts_.num_experts(); }
  const Vec& posterior() const noexcept { return posterior_; }
  const ExpertJointModel& experts() const noexcept { return experts_; }

 private:
  Vec posterior_;
  ExpertJointModel experts_;
};

struct Classify {
  std::size_t label;
  bool operator==(const Classify&) const = default;
};

struct Defer {
  std::size_t expert;
  bool operator==(const Defer&) const = default;
};

/// An element of the augmented output space: a label or "defer to expert j".
using Decision = std::variant<Classify, Defer>;

inline bool is_defer(const Decision& d) { return std::holds_alternative<Defer>(d); }

/// One draw (x, y, m_1..m_J).
struct LabeledSample {
  Vec features;
  std::size_t label = 0;
  std::vector<std::size_t> expert_preds;
};

/// Acc_j(x) = sum_y eta_y Pr(M_j = Y | Y = y).
double expert_accuracy(const ConditionalPoint& point, std::size_t j);

/// All J expert accuracies.
Vec expert_accuracies(const ConditionalPoint& point);

/// Pr(exists j in subset : M_j = Y | X = x). Empty subset gives 0.
double union_correct_prob(const ConditionalPoint& point, std::span<const std::size_t> subset);

/// Pr over all J experts.
double union_correct_prob(const ConditionalPoint& point);

/// Probability that the experts at positions 0..pos-1 of `order` all err and
/// the expert at position `pos` is correct.
double prefix_exclusive_correct(const ConditionalPoint& point, std::span<const std::size_t> order,
                                std::size_t pos);

/// Canonical FullJoint form with identical marginals and event probabilities.
ConditionalPoint to_full_joint(const ConditionalPoint& point);

/// Throws std::invalid_argument unless `order` is a permutation of [0, n).
void require_permutation(std::span<const std::size_t> order, std::size_t n);

}  // namespace picce
