#include "picce/risk.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace picce {

namespace {

void check_dims(const ConditionalPoint& point, std::span<const double> theta) {
  if (theta.size() != point.num_classes() + point.num_experts()) {
    throw std::invalid_argument("score vector length must equal K + J");
  }
  require_finite(theta);
}

double weighted_risk(std::span<const double> weights, std::span<const double> theta,
                     std::size_t num_classes, BaseLoss base) {
  double risk = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] != 0.0) risk += weights[i] * base_loss(base, theta, i, num_classes);
  }
  return risk;
}

/// A^j_sigma for every position of `order`.
Vec prefix_exclusive_weights(const ConditionalPoint& point, std::span<const std::size_t> order) {
  Vec out(order.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    out[pos] = prefix_exclusive_correct(point, order, pos);
  }
  return out;
}

}  // namespace

std::vector<std::size_t> expert_order(std::span<const double> theta, std::size_t num_experts) {
  if (num_experts > theta.size()) throw std::invalid_argument("more experts than scores");
  const auto scores = theta.last(num_experts);
  std::vector<std::size_t> order(num_experts);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

Vec risk_weights(const ConditionalPoint& point, std::span<const double> theta, Family family) {
  check_dims(point, theta);
  const std::size_t num_classes = point.num_classes();
  const std::size_t num_experts = point.num_experts();
  Vec w(num_classes + num_experts, 0.0);
  std::copy(point.posterior().begin(), point.posterior().end(), w.begin());
  if (num_experts == 0) return w;
  switch (family) {
    case Family::Vanilla:
      for (std::size_t j = 0; j < num_experts; ++j) w[num_classes + j] = expert_accuracy(point, j);
      break;
    case Family::PCE: {
      const std::size_t top = confident_expert(theta, num_experts);
      w[num_classes + top] = expert_accuracy(point, top);
      break;
    }
    case Family::PiCCE: {
      const auto order = expert_order(theta, num_experts);
      const auto a = prefix_exclusive_weights(point, order);
      for (std::size_t pos = 0; pos < order.size(); ++pos) w[num_classes + order[pos]] = a[pos];
      break;
    }
  }
  return w;
}

double conditional_risk(const ConditionalPoint& point, std::span<const double> theta,
                        const SurrogateSpec& spec) {
  const auto w = risk_weights(point, theta, spec.family);
  return weighted_risk(w, theta, point.num_classes(), spec.base);
}

double conditional_risk_vanilla(const ConditionalPoint& point, std::span<const double> theta,
                                BaseLoss base) {
  return conditional_risk(point, theta, {Family::Vanilla, base});
}

double conditional_risk_pce(const ConditionalPoint& point, std::span<const double> theta,
                            BaseLoss base) {
  return conditional_risk(point, theta, {Family::PCE, base});
}

double conditional_risk_picce(const ConditionalPoint& point, std::span<const double> theta,
                              BaseLoss base) {
  return conditional_risk(point, theta, {Family::PiCCE, base});
}

DummyDistribution::DummyDistribution(Vec p, std::size_t k) : probs(std::move(p)), num_classes(k) {
  if (num_classes > probs.size()) throw std::invalid_argument("label part longer than vector");
  double total = 0.0;
  for (double q : probs) {
    if (!(q >= -kProbTolerance && q <= 1.0 + kProbTolerance)) {
      throw std::invalid_argument("dummy distribution entry outside [0,1]");
    }
    total += q;
  }
  if (std::abs(total - 1.0) > kProbTolerance) {
    throw std::invalid_argument("dummy distribution does not sum to 1");
  }
}

DummyDistribution dummy_vanilla(const ConditionalPoint& point) {
  const auto acc = expert_accuracies(point);
  const double norm = 1.0 + std::accumulate(acc.begin(), acc.end(), 0.0);
  Vec p;
  p.reserve(point.num_classes() + acc.size());
  for (double eta : point.posterior()) p.push_back(eta / norm);
  for (double a : acc) p.push_back(a / norm);
  return DummyDistribution(std::move(p), point.num_classes());
}

PceDummy dummy_pce(const ConditionalPoint& point, std::span<const double> theta) {
  check_dims(point, theta);
  const auto acc = expert_accuracies(point);
  const double top_acc = acc.empty() ? 0.0 : acc[confident_expert(theta, acc.size())];
  const double norm = 1.0 + top_acc;
  Vec raw;
  raw.reserve(theta.size());
  for (double eta : point.posterior()) raw.push_back(eta / norm);
  for (double a : acc) raw.push_back(a / norm);
  const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
  Vec scaled(raw);
  for (double& q : scaled) q /= total;
  return PceDummy{std::move(raw), DummyDistribution(std::move(scaled), point.num_classes())};
}

DummyDistribution dummy_picce(const ConditionalPoint& point, std::span<const double> theta) {
  const auto w = risk_weights(point, theta, Family::PiCCE);
  const double norm = 1.0 + union_correct_prob(point);
  Vec p(w);
  for (double& q : p) q /= norm;
  return DummyDistribution(std::move(p), point.num_classes());
}

double flattening_margin(const DummyDistribution& d, std::size_t num_classes) {
  if (num_classes < 2 || num_classes > d.probs.size()) {
    throw std::out_of_range("label count out of range for flattening margin");
  }
  Vec labels(d.probs.begin(), d.probs.begin() + static_cast<std::ptrdiff_t>(num_classes));
  std::partial_sort(labels.begin(), labels.begin() + 2, labels.end(), std::greater<>());
  return labels[0] - labels[1];
}

}  // namespace picce
