#include "picce/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace picce {

namespace {

void require_probability(double p, const char* what) {
  if (!std::isfinite(p) || p < -kProbTolerance || p > 1.0 + kProbTolerance) {
    throw std::invalid_argument(std::string(what) + " must lie in [0,1], got " +
                                std::to_string(p));
  }
}

void require_unit_sum(std::span<const double> probs, const char* what) {
  for (double p : probs) require_probability(p, what);
  const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  if (std::abs(total - 1.0) > kProbTolerance) {
    throw std::invalid_argument(std::string(what) + " must sum to 1, got " + std::to_string(total));
  }
}

std::uint32_t subset_mask(std::span<const std::size_t> subset, std::size_t num_experts) {
  std::uint32_t mask = 0;
  for (std::size_t j : subset) {
    if (j >= num_experts) throw std::out_of_range("expert index out of range");
    mask |= (1u << j);
  }
  return mask;
}

void check_subset(std::span<const std::size_t> subset, std::size_t num_experts) {
  for (std::size_t j : subset) {
    if (j >= num_experts) throw std::out_of_range("expert index out of range");
  }
}

}  // namespace

ExpertJointModel ExpertJointModel::independent(std::size_t num_classes, Matrix cond_accuracy,
                                               std::vector<Matrix> wrong_profile) {
  if (num_classes < 2) throw std::invalid_argument("need at least two classes");
  if (cond_accuracy.size() != num_classes) {
    throw std::invalid_argument("cond_accuracy needs one row per class");
  }
  const std::size_t num_experts = cond_accuracy.front().size();
  for (const auto& row : cond_accuracy) {
    if (row.size() != num_experts) throw std::invalid_argument("ragged cond_accuracy rows");
    for (double a : row) require_probability(a, "conditional accuracy");
  }
  ExpertJointModel model;
  model.kind_ = ExpertModelKind::ConditionallyIndependent;
  model.num_classes_ = num_classes;
  model.num_experts_ = num_experts;
  model.cond_accuracy_ = std::move(cond_accuracy);
  model.wrong_profile_ = std::move(wrong_profile);
  model.validate_wrong_profile();
  return model;
}

ExpertJointModel ExpertJointModel::full_joint(std::size_t num_classes, std::size_t num_experts,
                                              Matrix pattern_probs,
                                              std::vector<Matrix> wrong_profile) {
  if (num_classes < 2) throw std::invalid_argument("need at least two classes");
  if (num_experts > kMaxPatternExperts) {
    throw std::invalid_argument("FullJoint supports at most 20 experts");
  }
  if (pattern_probs.size() != num_classes) {
    throw std::invalid_argument("pattern table needs one row per class");
  }
  const std::size_t num_patterns = std::size_t{1} << num_experts;
  for (const auto& row : pattern_probs) {
    if (row.size() != num_patterns) throw std::invalid_argument("pattern row must have 2^J entries");
    require_unit_sum(row, "pattern probabilities");
  }
  ExpertJointModel model;
  model.kind_ = ExpertModelKind::FullJoint;
  model.num_classes_ = num_classes;
  model.num_experts_ = num_experts;
  model.cond_accuracy_.assign(num_classes, Vec(num_experts, 0.0));
  for (std::size_t y = 0; y < num_classes; ++y) {
    for (std::size_t mask = 0; mask < num_patterns; ++mask) {
      for (std::size_t j = 0; j < num_experts; ++j) {
        if (mask & (std::size_t{1} << j)) model.cond_accuracy_[y][j] += pattern_probs[y][mask];
      }
    }
  }
  model.patterns_ = std::move(pattern_probs);
  model.wrong_profile_ = std::move(wrong_profile);
  model.validate_wrong_profile();
  return model;
}

void ExpertJointModel::validate_wrong_profile() const {
  if (wrong_profile_.empty()) return;
  if (wrong_profile_.size() != num_experts_) {
    throw std::invalid_argument("wrong-label profile needs one block per expert");
  }
  for (const auto& block : wrong_profile_) {
    if (block.size() != num_classes_) {
      throw std::invalid_argument("wrong-label profile needs one row per true label");
    }
    for (std::size_t y = 0; y < num_classes_; ++y) {
      if (block[y].size() != num_classes_) {
        throw std::invalid_argument("wrong-label row must have K entries");
      }
      require_unit_sum(block[y], "wrong-label profile");
      if (block[y][y] > kProbTolerance) {
        throw std::invalid_argument("wrong-label profile puts mass on the true label");
      }
    }
  }
}

double ExpertJointModel::cond_accuracy(std::size_t y, std::size_t j) const {
  if (y >= num_classes_ || j >= num_experts_) throw std::out_of_range("index out of range");
  return cond_accuracy_[y][j];
}

double ExpertJointModel::pattern_prob(std::size_t y, std::uint32_t mask) const {
  if (y >= num_classes_) throw std::out_of_range("label out of range");
  if (num_experts_ > kMaxPatternExperts) throw std::invalid_argument("too many experts for patterns");
  if (mask >> num_experts_) throw std::out_of_range("pattern mask out of range");
  if (kind_ == ExpertModelKind::FullJoint) return patterns_[y][mask];
  double p = 1.0;
  for (std::size_t j = 0; j < num_experts_; ++j) {
    const double a = cond_accuracy_[y][j];
    p *= (mask & (1u << j)) ? a : 1.0 - a;
  }
  return p;
}

double ExpertJointModel::union_correct_given(std::size_t y,
                                             std::span<const std::size_t> subset) const {
  if (y >= num_classes_) throw std::out_of_range("label out of range");
  if (kind_ == ExpertModelKind::ConditionallyIndependent) {
    check_subset(subset, num_experts_);
    double all_wrong = 1.0;
    std::vector<bool> seen(num_experts_, false);
    for (std::size_t j : subset) {
      if (seen[j]) continue;
      seen[j] = true;
      all_wrong *= 1.0 - cond_accuracy_[y][j];
    }
    return 1.0 - all_wrong;
  }
  const std::uint32_t target = subset_mask(subset, num_experts_);
  if (target == 0) return 0.0;
  double p = 0.0;
  const auto& row = patterns_[y];
  for (std::size_t mask = 0; mask < row.size(); ++mask) {
    if (mask & target) p += row[mask];
  }
  return p;
}

double ExpertJointModel::exclusive_correct_given(std::size_t y, std::span<const std::size_t> wrong,
                                                 std::size_t j) const {
  if (y >= num_classes_ || j >= num_experts_) throw std::out_of_range("index out of range");
  if (kind_ == ExpertModelKind::ConditionallyIndependent) {
    check_subset(wrong, num_experts_);
    double p = cond_accuracy_[y][j];
    std::vector<bool> seen(num_experts_, false);
    for (std::size_t k : wrong) {
      if (k == j) return 0.0;
      if (seen[k]) continue;
      seen[k] = true;
      p *= 1.0 - cond_accuracy_[y][k];
    }
    return p;
  }
  const std::uint32_t wrong_mask = subset_mask(wrong, num_experts_);
  const std::uint32_t bit = 1u << j;
  if (wrong_mask & bit) return 0.0;
  double p = 0.0;
  const auto& row = patterns_[y];
  for (std::size_t mask = 0; mask < row.size(); ++mask) {
    if ((mask & bit) && !(mask & wrong_mask)) p += row[mask];
  }
  return p;
}

Vec ExpertJointModel::wrong_label_dist(std::size_t j, std::size_t y) const {
  if (y >= num_classes_ || j >= num_experts_) throw std::out_of_range("index out of range");
  if (!wrong_profile_.empty()) return wrong_profile_[j][y];
  Vec dist(num_classes_, 1.0 / static_cast<double>(num_classes_ - 1));
  dist[y] = 0.0;
  return dist;
}

ConditionalPoint::ConditionalPoint(Vec class_posterior, ExpertJointModel experts)
    : posterior_(std::move(class_posterior)), experts_(std::move(experts)) {
  if (posterior_.size() < 2) throw std::invalid_argument("need at least two classes");
  if (posterior_.size() != experts_.num_classes()) {
    throw std::invalid_argument("posterior length does not match the expert model's K");
  }
  require_unit_sum(posterior_, "class posterior");
}

double expert_accuracy(const ConditionalPoint& point, std::size_t j) {
  if (j >= point.num_experts()) throw std::out_of_range("expert index out of range");
  double acc = 0.0;
  for (std::size_t y = 0; y < point.num_classes(); ++y) {
    acc += point.posterior()[y] * point.experts().cond_accuracy(y, j);
  }
  return acc;
}

Vec expert_accuracies(const ConditionalPoint& point) {
  Vec acc(point.num_experts());
  for (std::size_t j = 0; j < acc.size(); ++j) acc[j] = expert_accuracy(point, j);
  return acc;
}

double union_correct_prob(const ConditionalPoint& point, std::span<const std::size_t> subset) {
  double p = 0.0;
  for (std::size_t y = 0; y < point.num_classes(); ++y) {
    p += point.posterior()[y] * point.experts().union_correct_given(y, subset);
  }
  return p;
}

double union_correct_prob(const ConditionalPoint& point) {
  std::vector<std::size_t> all(point.num_experts());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return union_correct_prob(point, all);
}

void require_permutation(std::span<const std::size_t> order, std::size_t n) {
  if (order.size() != n) throw std::invalid_argument("order must list every expert once");
  std::vector<bool> seen(n, false);
  for (std::size_t j : order) {
    if (j >= n || seen[j]) throw std::invalid_argument("order is not a permutation");
    seen[j] = true;
  }
}

double prefix_exclusive_correct(const ConditionalPoint& point, std::span<const std::size_t> order,
                                std::size_t pos) {
  require_permutation(order, point.num_experts());
  if (pos >= order.size()) throw std::out_of_range("position out of range");
  const auto prefix = order.first(pos);
  double p = 0.0;
  for (std::size_t y = 0; y < point.num_classes(); ++y) {
    p += point.posterior()[y] * point.experts().exclusive_correct_given(y, prefix, order[pos]);
  }
  return p;
}

ConditionalPoint to_full_joint(const ConditionalPoint& point) {
  const auto& model = point.experts();
  if (model.kind() == ExpertModelKind::FullJoint) return point;
  const std::size_t num_experts = model.num_experts();
  if (num_experts > kMaxPatternExperts) {
    throw std::invalid_argument("FullJoint supports at most 20 experts");
  }
  const std::size_t num_patterns = std::size_t{1} << num_experts;
  Matrix patterns(model.num_classes(), Vec(num_patterns));
  for (std::size_t y = 0; y < model.num_classes(); ++y) {
    for (std::size_t mask = 0; mask < num_patterns; ++mask) {
      patterns[y][mask] = model.pattern_prob(y, static_cast<std::uint32_t>(mask));
    }
  }
  auto joint = ExpertJointModel::full_joint(model.num_classes(), num_experts, std::move(patterns),
                                            model.wrong_profile());
  return ConditionalPoint(point.posterior(), std::move(joint));
}

}  // namespace picce
