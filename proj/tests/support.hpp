#pragma once

// Shared fixtures and brute-force oracles for the unit tests.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "picce/core.hpp"
#include "picce/losses.hpp"

namespace picce::test {

inline std::string source_path(const std::string& rel) { return std::string(PICCE_SOURCE_DIR) + "/" + rel; }

/// eta = (0.8, 0.1, 0.1); expert accuracy rows (0.9,0.4,0.4), (0.6,0.9,0.9), (0.6,0.9,0.9).
inline ConditionalPoint example2() {
  Matrix cond{{0.9, 0.6, 0.6}, {0.4, 0.9, 0.9}, {0.4, 0.9, 0.9}};
  return ConditionalPoint({0.8, 0.1, 0.1}, ExpertJointModel::independent(3, cond));
}

/// eta = (0.5, 0.5); independent experts with accuracy 0.8 and 0.6 on both classes.
inline ConditionalPoint two_expert_point() {
  Matrix cond{{0.8, 0.6}, {0.8, 0.6}};
  return ConditionalPoint({0.5, 0.5}, ExpertJointModel::independent(2, cond));
}

/// Pr(pattern | y) by product for independent models, table lookup otherwise.
inline double pattern_mass(const ConditionalPoint& p, std::size_t y, std::uint32_t mask) {
  const auto& m = p.experts();
  if (m.kind() == ExpertModelKind::FullJoint) return m.pattern_table()[y][mask];
  double prob = 1.0;
  for (std::size_t j = 0; j < p.num_experts(); ++j) {
    const double a = m.cond_accuracy_table()[y][j];
    prob *= (mask >> j) & 1u ? a : 1.0 - a;
  }
  return prob;
}

/// Sum over labels and correctness patterns of eta_y Pr(pattern | y) for
/// patterns accepted by `pred`.
inline double enumerate_patterns(const ConditionalPoint& p,
                                 const std::function<bool(std::uint32_t)>& pred) {
  double total = 0.0;
  for (std::size_t y = 0; y < p.num_classes(); ++y) {
    for (std::uint32_t mask = 0; mask < (1u << p.num_experts()); ++mask) {
      if (pred(mask)) total += p.posterior()[y] * pattern_mass(p, y, mask);
    }
  }
  return total;
}

/// Exact E[surrogate] by enumerating every (y, m) with its probability.
inline double exact_expected_surrogate(const ConditionalPoint& p, std::span<const double> theta,
                                       const SurrogateSpec& spec) {
  const std::size_t K = p.num_classes();
  const std::size_t J = p.num_experts();
  double total = 0.0;
  std::vector<std::size_t> m(J, 0);
  std::size_t combos = 1;
  for (std::size_t j = 0; j < J; ++j) combos *= K;
  for (std::size_t y = 0; y < K; ++y) {
    for (std::size_t c = 0; c < combos; ++c) {
      std::size_t code = c;
      std::uint32_t mask = 0;
      double wrong_mass = 1.0;
      for (std::size_t j = 0; j < J; ++j) {
        m[j] = code % K;
        code /= K;
        if (m[j] == y) {
          mask |= 1u << j;
        } else {
          wrong_mass *= p.experts().wrong_label_dist(j, y)[m[j]];
        }
      }
      const double prob = p.posterior()[y] * pattern_mass(p, y, mask) * wrong_mass;
      if (prob > 0.0) total += prob * surrogate(spec, theta, y, m);
    }
  }
  return total;
}

/// Central differences with step h.
inline Vec finite_difference(const std::function<double(std::span<const double>)>& f, Vec x,
                             double h = 1e-5) {
  Vec grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double up = f(x);
    x[i] = orig - h;
    const double down = f(x);
    x[i] = orig;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

/// max_i |a_i - b_i| / max_i |b_i|.
inline double relative_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0;
  double scale = 1e-300;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  return diff / scale;
}

inline const SurrogateSpec kAllSpecs[] = {
    {Family::Vanilla, BaseLoss::CE}, {Family::Vanilla, BaseLoss::OvaLog},
    {Family::PCE, BaseLoss::CE},     {Family::PCE, BaseLoss::OvaLog},
    {Family::PiCCE, BaseLoss::CE},   {Family::PiCCE, BaseLoss::OvaLog},
};

}  // namespace picce::test
