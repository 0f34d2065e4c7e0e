#include "picce/generators.hpp"

#include <cmath>

#include "picce/random.hpp"

namespace picce {

Vec random_simplex(std::size_t n, std::mt19937_64& rng) {
  Vec v(n);
  double total = 0.0;
  for (double& x : v) {
    double u = uniform01(rng);
    while (u <= 0.0) u = uniform01(rng);
    x = -std::log(u);
    total += x;
  }
  for (double& x : v) x /= total;
  return v;
}

namespace {

std::vector<Matrix> random_wrong_profile(std::size_t num_classes, std::size_t num_experts,
                                         std::mt19937_64& rng) {
  std::vector<Matrix> profile(num_experts, Matrix(num_classes));
  for (auto& block : profile) {
    for (std::size_t y = 0; y < num_classes; ++y) {
      const auto wrong = random_simplex(num_classes - 1, rng);
      block[y].assign(num_classes, 0.0);
      for (std::size_t k = 0, w = 0; k < num_classes; ++k) {
        if (k != y) block[y][k] = wrong[w++];
      }
    }
  }
  return profile;
}

}  // namespace

ConditionalPoint random_point(std::size_t num_classes, std::size_t num_experts,
                              ExpertModelKind kind, std::mt19937_64& rng) {
  auto posterior = random_simplex(num_classes, rng);
  std::vector<Matrix> profile;
  if (uniform01(rng) < 0.5) profile = random_wrong_profile(num_classes, num_experts, rng);
  if (kind == ExpertModelKind::ConditionallyIndependent) {
    Matrix acc(num_classes, Vec(num_experts));
    for (auto& row : acc) {
      for (double& a : row) a = uniform01(rng);
    }
    return ConditionalPoint(std::move(posterior),
                            ExpertJointModel::independent(num_classes, std::move(acc), std::move(profile)));
  }
  Matrix patterns(num_classes);
  for (auto& row : patterns) row = random_simplex(std::size_t{1} << num_experts, rng);
  return ConditionalPoint(std::move(posterior),
                          ExpertJointModel::full_joint(num_classes, num_experts, std::move(patterns),
                                                       std::move(profile)));
}

ConditionalPoint random_dominant_point(std::size_t num_classes, std::size_t num_experts,
                                       std::mt19937_64& rng) {
  auto posterior = random_simplex(num_classes, rng);
  const auto dominant = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(num_experts));
  Matrix acc(num_classes, Vec(num_experts));
  for (std::size_t y = 0; y < num_classes; ++y) {
    const double top = 0.3 + 0.65 * uniform01(rng);
    for (std::size_t j = 0; j < num_experts; ++j) {
      acc[y][j] = j == dominant ? top : top * (0.2 + 0.8 * uniform01(rng));
    }
  }
  return ConditionalPoint(std::move(posterior),
                          ExpertJointModel::independent(num_classes, std::move(acc)));
}

Vec random_scores(std::size_t dim, double scale, std::mt19937_64& rng) {
  Vec theta(dim);
  for (double& t : theta) t = (2.0 * uniform01(rng) - 1.0) * scale;
  return theta;
}

}  // namespace picce
