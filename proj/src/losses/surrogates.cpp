#include "picce/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace picce {

namespace {

std::size_t classes_of(std::span<const double> theta, std::span<const std::size_t> m) {
  if (theta.size() < m.size() + 2) {
    throw std::invalid_argument("score vector shorter than K + J with K >= 2");
  }
  require_finite(theta);
  return theta.size() - m.size();
}

void check_labels(std::size_t y, std::span<const std::size_t> m, std::size_t num_classes) {
  if (y >= num_classes) throw std::out_of_range("label out of range");
  for (std::size_t pred : m) {
    if (pred >= num_classes) throw std::out_of_range("expert prediction out of range");
  }
}

/// Index of the expert term a surrogate adds on top of phi(theta, y), if any.
std::optional<std::size_t> selected_expert(Family family, std::span<const double> theta,
                                           std::size_t y, std::span<const std::size_t> m) {
  switch (family) {
    case Family::PCE: {
      if (m.empty()) return std::nullopt;
      const std::size_t j = confident_expert(theta, m.size());
      if (m[j] != y) return std::nullopt;
      return j;
    }
    case Family::PiCCE:
      return confident_correct_expert(theta, y, m);
    case Family::Vanilla:
      break;
  }
  throw std::logic_error("vanilla surrogate has no single selected expert");
}

}  // namespace

std::string_view to_string(BaseLoss base) {
  return base == BaseLoss::CE ? "ce" : "ova";
}

std::string_view to_string(Family family) {
  switch (family) {
    case Family::Vanilla: return "vanilla";
    case Family::PCE: return "pce";
    case Family::PiCCE: return "picce";
  }
  return "?";
}

std::string to_string(const SurrogateSpec& spec) {
  return std::string(to_string(spec.family)) + "-" + std::string(to_string(spec.base));
}

SurrogateSpec parse_surrogate_spec(std::string_view text) {
  const auto dash = text.find('-');
  if (dash == std::string_view::npos) {
    throw std::invalid_argument("surrogate spec must look like family-base, got '" +
                                std::string(text) + "'");
  }
  const auto family = text.substr(0, dash);
  const auto base = text.substr(dash + 1);
  SurrogateSpec spec;
  if (family == "vanilla") spec.family = Family::Vanilla;
  else if (family == "pce") spec.family = Family::PCE;
  else if (family == "picce") spec.family = Family::PiCCE;
  else throw std::invalid_argument("unknown surrogate family '" + std::string(family) + "'");
  if (base == "ce") spec.base = BaseLoss::CE;
  else if (base == "ova") spec.base = BaseLoss::OvaLog;
  else throw std::invalid_argument("unknown base loss '" + std::string(base) + "'");
  return spec;
}

double softplus(double t) {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("log_sum_exp of an empty vector");
  const double top = *std::max_element(v.begin(), v.end());
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - top);
  return top + std::log(acc);
}

Vec softmax(std::span<const double> v) {
  const double lse = log_sum_exp(v);
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::exp(v[i] - lse);
  return out;
}

void require_finite(std::span<const double> theta) {
  for (double t : theta) {
    if (!std::isfinite(t)) throw std::invalid_argument("score vector has a non-finite entry");
  }
}

double phi_ce(std::span<const double> theta, std::size_t index) {
  if (index >= theta.size()) throw std::out_of_range("loss index out of range");
  const double top = *std::max_element(theta.begin(), theta.end());
  if (theta[index] < top) return log_sum_exp(theta) - theta[index];
  // log1p keeps precision when the loss is far below one ulp of the scores.
  double rest = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (i != index) rest += std::exp(theta[i] - top);
  }
  return std::log1p(rest);
}

double phi_ova(std::span<const double> theta, std::size_t index, std::size_t num_classes) {
  if (index >= theta.size()) throw std::out_of_range("loss index out of range");
  const double t = theta[index];
  if (index >= num_classes) return softplus(-t) - softplus(t);
  double loss = softplus(-t);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (i != index) loss += softplus(theta[i]);
  }
  return loss;
}

double base_loss(BaseLoss base, std::span<const double> theta, std::size_t index,
                 std::size_t num_classes) {
  return base == BaseLoss::CE ? phi_ce(theta, index) : phi_ova(theta, index, num_classes);
}

void add_base_loss_gradient(BaseLoss base, std::span<const double> theta, std::size_t index,
                            std::size_t num_classes, double weight, std::span<double> grad) {
  if (index >= theta.size()) throw std::out_of_range("loss index out of range");
  if (weight == 0.0) return;
  if (base == BaseLoss::CE) {
    const double lse = log_sum_exp(theta);
    for (std::size_t i = 0; i < theta.size(); ++i) grad[i] += weight * std::exp(theta[i] - lse);
    grad[index] -= weight;
    return;
  }
  if (index >= num_classes) {
    // softplus(-t) - softplus(t) = -t
    grad[index] -= weight;
    return;
  }
  for (std::size_t i = 0; i < theta.size(); ++i) {
    grad[i] += weight * (i == index ? sigmoid(theta[i]) - 1.0 : sigmoid(theta[i]));
  }
}

int target_loss_01(const Decision& decision, std::size_t y, std::span<const std::size_t> m) {
  if (const auto* c = std::get_if<Classify>(&decision)) return c->label != y ? 1 : 0;
  const auto& d = std::get<Defer>(decision);
  if (d.expert >= m.size()) throw std::out_of_range("deferral to a nonexistent expert");
  return m[d.expert] != y ? 1 : 0;
}

std::size_t confident_expert(std::span<const double> theta, std::size_t num_experts) {
  if (num_experts == 0 || num_experts > theta.size()) {
    throw std::invalid_argument("no expert scores to choose from");
  }
  const auto experts = theta.last(num_experts);
  return static_cast<std::size_t>(std::max_element(experts.begin(), experts.end()) -
                                  experts.begin());
}

std::optional<std::size_t> confident_correct_expert(std::span<const double> theta, std::size_t y,
                                                    std::span<const std::size_t> m) {
  const std::size_t num_classes = classes_of(theta, m);
  std::optional<std::size_t> best;
  for (std::size_t j = 0; j < m.size(); ++j) {
    if (m[j] != y) continue;
    if (!best || theta[num_classes + j] > theta[num_classes + *best]) best = j;
  }
  return best;
}

namespace {

/// Evaluates phi(theta, i) for many i while computing log-sum-exp once.
class BaseLossTerms {
 public:
  BaseLossTerms(BaseLoss base, std::span<const double> theta, std::size_t num_classes)
      : base_(base), theta_(theta), num_classes_(num_classes) {
    if (base_ == BaseLoss::CE) {
      lse_ = log_sum_exp(theta_);
      top_ = *std::max_element(theta_.begin(), theta_.end());
    }
  }

  double operator()(std::size_t index) const {
    if (base_ == BaseLoss::CE) {
      return theta_[index] < top_ ? lse_ - theta_[index] : phi_ce(theta_, index);
    }
    return phi_ova(theta_, index, num_classes_);
  }

 private:
  BaseLoss base_;
  std::span<const double> theta_;
  std::size_t num_classes_;
  double lse_ = 0.0;
  double top_ = 0.0;
};

/// grad = sum_i w_i d phi(theta, i), with one softmax / sigmoid pass.
void add_weighted_gradient(BaseLoss base, std::span<const double> theta,
                           std::span<const double> weights, std::size_t num_classes,
                           std::span<double> grad) {
  double label_mass = 0.0;
  double total_mass = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    total_mass += weights[i];
    if (i < num_classes) label_mass += weights[i];
  }
  if (base == BaseLoss::CE) {
    const double lse = log_sum_exp(theta);
    for (std::size_t i = 0; i < theta.size(); ++i) {
      grad[i] += total_mass * std::exp(theta[i] - lse) - weights[i];
    }
    return;
  }
  // Label terms add s(theta_k) on every coordinate (s - 1 on their own);
  // expert terms contribute d(-t)/dt = -1 on their own coordinate.
  for (std::size_t i = 0; i < theta.size(); ++i) {
    grad[i] += label_mass * sigmoid(theta[i]) - weights[i];
  }
}

}  // namespace

void add_weighted_base_loss_gradient(BaseLoss base, std::span<const double> theta,
                                     std::span<const double> weights, std::size_t num_classes,
                                     std::span<double> grad) {
  if (weights.size() != theta.size() || grad.size() != theta.size()) {
    throw std::invalid_argument("weights and gradient must match the score length");
  }
  add_weighted_gradient(base, theta, weights, num_classes, grad);
}

double vanilla_surrogate(std::span<const double> theta, std::size_t y,
                         std::span<const std::size_t> m, BaseLoss base) {
  const std::size_t num_classes = classes_of(theta, m);
  check_labels(y, m, num_classes);
  const BaseLossTerms phi(base, theta, num_classes);
  double loss = phi(y);
  for (std::size_t j = 0; j < m.size(); ++j) {
    if (m[j] == y) loss += phi(num_classes + j);
  }
  return loss;
}

double pce_surrogate(std::span<const double> theta, std::size_t y,
                     std::span<const std::size_t> m, BaseLoss base) {
  const std::size_t num_classes = classes_of(theta, m);
  check_labels(y, m, num_classes);
  const BaseLossTerms phi(base, theta, num_classes);
  double loss = phi(y);
  if (const auto j = selected_expert(Family::PCE, theta, y, m)) loss += phi(num_classes + *j);
  return loss;
}

double picce_surrogate(std::span<const double> theta, std::size_t y,
                       std::span<const std::size_t> m, BaseLoss base) {
  const std::size_t num_classes = classes_of(theta, m);
  check_labels(y, m, num_classes);
  const BaseLossTerms phi(base, theta, num_classes);
  double loss = phi(y);
  if (const auto j = selected_expert(Family::PiCCE, theta, y, m)) loss += phi(num_classes + *j);
  return loss;
}

double surrogate(const SurrogateSpec& spec, std::span<const double> theta, std::size_t y,
                 std::span<const std::size_t> m) {
  switch (spec.family) {
    case Family::Vanilla: return vanilla_surrogate(theta, y, m, spec.base);
    case Family::PCE: return pce_surrogate(theta, y, m, spec.base);
    case Family::PiCCE: return picce_surrogate(theta, y, m, spec.base);
  }
  throw std::logic_error("unknown surrogate family");
}

Vec surrogate_weights(const SurrogateSpec& spec, std::span<const double> theta, std::size_t y,
                      std::span<const std::size_t> m) {
  const std::size_t num_classes = classes_of(theta, m);
  check_labels(y, m, num_classes);
  Vec w(theta.size(), 0.0);
  w[y] = 1.0;
  if (spec.family == Family::Vanilla) {
    for (std::size_t j = 0; j < m.size(); ++j) {
      if (m[j] == y) w[num_classes + j] = 1.0;
    }
  } else if (const auto j = selected_expert(spec.family, theta, y, m)) {
    w[num_classes + *j] = 1.0;
  }
  return w;
}

Vec surrogate_gradient(const SurrogateSpec& spec, std::span<const double> theta, std::size_t y,
                       std::span<const std::size_t> m) {
  const auto w = surrogate_weights(spec, theta, y, m);
  Vec grad(theta.size(), 0.0);
  add_weighted_gradient(spec.base, theta, w, theta.size() - m.size(), grad);
  return grad;
}

}  // namespace picce
