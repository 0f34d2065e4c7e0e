#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

#include "picce/optim.hpp"
#include "picce/parallel.hpp"
#include "picce/random.hpp"
#include "picce/risk.hpp"

namespace picce {

namespace {

constexpr std::size_t kExhaustiveOrderLimit = 6;
constexpr double kOrderSpacing = 1.0;
constexpr double kMaxNewtonStep = 1.0;  // per-coordinate cap on a Newton step

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

/// Gradient with coordinates that cannot move (gauge-pinned or pushing past
/// the clamp) zeroed.
Vec projected_gradient(std::span<const double> theta, Vec grad, BaseLoss base, double clamp) {
  if (base == BaseLoss::CE) grad[0] = 0.0;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (theta[i] >= clamp && grad[i] < 0.0) grad[i] = 0.0;
    if (theta[i] <= -clamp && grad[i] > 0.0) grad[i] = 0.0;
  }
  return grad;
}

Vec project_step(std::span<const double> theta, std::span<const double> dir, double step,
                 double clamp) {
  Vec out(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    out[i] = std::clamp(theta[i] - step * dir[i], -clamp, clamp);
  }
  return out;
}

/// Solves H d = g on the free coordinates, where H is the Hessian of the
/// weighted base loss for the expert order at theta. Pinned and clamped
/// coordinates (zero in pg) keep d = 0.
Vec newton_direction(const ConditionalPoint& point, std::span<const double> theta,
                     std::span<const double> pg, const SurrogateSpec& spec) {
  const auto w = risk_weights(point, theta, spec.family);
  std::vector<std::size_t> free;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (pg[i] != 0.0) free.push_back(i);
  }
  Vec dir(theta.size(), 0.0);
  if (free.empty()) return dir;
  const auto n = static_cast<Eigen::Index>(free.size());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd g(n);
  for (Eigen::Index a = 0; a < n; ++a) g[a] = pg[free[static_cast<std::size_t>(a)]];
  if (spec.base == BaseLoss::CE) {
    double mass = 0.0;
    for (double x : w) mass += x;
    const auto p = softmax(theta);
    for (Eigen::Index a = 0; a < n; ++a) {
      const double pa = p[free[static_cast<std::size_t>(a)]];
      for (Eigen::Index b = 0; b < n; ++b) h(a, b) = -mass * pa * p[free[static_cast<std::size_t>(b)]];
      h(a, a) += mass * pa;
    }
  } else {
    double label_mass = 0.0;
    for (std::size_t i = 0; i < point.num_classes(); ++i) label_mass += w[i];
    for (Eigen::Index a = 0; a < n; ++a) {
      const double s = sigmoid(theta[free[static_cast<std::size_t>(a)]]);
      h(a, a) = label_mass * s * (1.0 - s);
    }
  }
  h.diagonal().array() += 1e-12;
  const Eigen::VectorXd d = h.ldlt().solve(g);
  if (!d.allFinite() || d.dot(g) <= 0.0) return Vec(pg.begin(), pg.end());
  const double scale = std::min(1.0, kMaxNewtonStep / d.cwiseAbs().maxCoeff());
  for (Eigen::Index a = 0; a < n; ++a) dir[free[static_cast<std::size_t>(a)]] = scale * d[a];
  return dir;
}

}  // namespace

void OptimizerConfig::validate() const {
  if (max_iters == 0) throw std::invalid_argument("max_iters must be positive");
  if (!(step_size > 0.0)) throw std::invalid_argument("step_size must be positive");
  if (!(grad_tolerance > 0.0)) throw std::invalid_argument("grad_tolerance must be positive");
  if (!(backtrack > 0.0 && backtrack < 1.0)) throw std::invalid_argument("backtrack must be in (0,1)");
  if (!(armijo > 0.0 && armijo < 1.0)) throw std::invalid_argument("armijo must be in (0,1)");
  if (!(score_clamp > 0.0)) throw std::invalid_argument("score_clamp must be positive");
}

Vec risk_gradient(const ConditionalPoint& point, std::span<const double> theta,
                  const SurrogateSpec& spec) {
  const auto w = risk_weights(point, theta, spec.family);
  Vec grad(theta.size(), 0.0);
  add_weighted_base_loss_gradient(spec.base, theta, w, point.num_classes(), grad);
  return grad;
}

Vec initial_scores(std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Vec theta(dim);
  for (double& t : theta) t = (2.0 * uniform01(rng) - 1.0) * 1e-3;
  return theta;
}

MinimizeResult minimize_conditional_risk(const ConditionalPoint& point, const SurrogateSpec& spec,
                                         const OptimizerConfig& config, Vec theta_init) {
  config.validate();
  if (theta_init.size() != point.num_classes() + point.num_experts()) {
    throw std::invalid_argument("initial scores must have K + J entries");
  }
  const double clamp = config.score_clamp;
  MinimizeResult result;
  Vec theta = project_step(theta_init, Vec(theta_init.size(), 0.0), 0.0, clamp);
  if (spec.base == BaseLoss::CE) theta[0] = 0.0;

  double risk = conditional_risk(point, theta, spec);
  Vec pg = projected_gradient(theta, risk_gradient(point, theta, spec), spec.base, clamp);
  double gnorm = norm2(pg);
  result.trace.push_back({0, risk, gnorm});

  std::size_t iter = 0;
  while (gnorm >= config.grad_tolerance && iter < config.max_iters) {
    ++iter;
    Vec dir = pg;
    double step = config.step_size;
    if (config.newton) {
      dir = newton_direction(point, theta, pg, spec);
      step = 1.0;
    }
    Vec candidate = project_step(theta, dir, step, clamp);
    double candidate_risk = conditional_risk(point, candidate, spec);
    if (config.use_line_search) {
      bool accepted = false;
      while (step > 1e-20) {
        double decrease = 0.0;
        for (std::size_t i = 0; i < theta.size(); ++i) decrease += pg[i] * (theta[i] - candidate[i]);
        if (candidate_risk <= risk - config.armijo * decrease) {
          accepted = true;
          break;
        }
        step *= config.backtrack;
        candidate = project_step(theta, dir, step, clamp);
        candidate_risk = conditional_risk(point, candidate, spec);
      }
      if (!accepted && config.newton) {
        // Near the optimum the decrease falls below rounding; take the full
        // step when it still shrinks the gradient.
        candidate = project_step(theta, dir, 1.0, clamp);
        const Vec cand_pg =
            projected_gradient(candidate, risk_gradient(point, candidate, spec), spec.base, clamp);
        if (norm2(cand_pg) < gnorm) {
          accepted = true;
          candidate_risk = conditional_risk(point, candidate, spec);
        }
      }
      if (!accepted) break;
    }
    theta = std::move(candidate);
    risk = candidate_risk;
    pg = projected_gradient(theta, risk_gradient(point, theta, spec), spec.base, clamp);
    gnorm = norm2(pg);
    result.trace.push_back({iter, risk, gnorm});
  }

  result.theta = std::move(theta);
  result.risk = risk;
  result.grad_norm = gnorm;
  result.iterations = iter;
  result.status = gnorm < config.grad_tolerance ? OptStatus::Converged : OptStatus::NonConvergence;
  return result;
}

MinimizeResult minimize_with_restarts(const ConditionalPoint& point, const SurrogateSpec& spec,
                                      const OptimizerConfig& config, std::uint64_t seed) {
  const std::size_t num_classes = point.num_classes();
  const std::size_t num_experts = point.num_experts();
  const std::size_t dim = num_classes + num_experts;
  auto best = minimize_conditional_risk(point, spec, config, initial_scores(dim, seed));
  if (spec.family == Family::Vanilla || num_experts < 2) return best;

  std::uint64_t start = 0;
  const auto try_order = [&](std::span<const std::size_t> order) {
    Vec init = initial_scores(dim, seed + ++start);
    for (std::size_t q = 0; q < order.size(); ++q) {
      init[num_classes + order[q]] += kOrderSpacing * static_cast<double>(order.size() - q);
    }
    auto run = minimize_conditional_risk(point, spec, config, std::move(init));
    const bool better_status =
        run.status == OptStatus::Converged && best.status != OptStatus::Converged;
    if (better_status || (run.status == best.status && run.risk < best.risk)) best = std::move(run);
  };

  std::vector<std::size_t> order(num_experts);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (num_experts <= kExhaustiveOrderLimit) {
    do {
      try_order(order);
    } while (std::next_permutation(order.begin(), order.end()));
    return best;
  }
  // Each leading expert, followed greedily by the largest exclusive-correct mass.
  for (std::size_t lead = 0; lead < num_experts; ++lead) {
    std::vector<std::size_t> greedy{lead};
    std::vector<std::size_t> rest;
    for (std::size_t j = 0; j < num_experts; ++j) {
      if (j != lead) rest.push_back(j);
    }
    while (!rest.empty()) {
      std::size_t pick = 0;
      double pick_mass = -1.0;
      for (std::size_t r = 0; r < rest.size(); ++r) {
        greedy.push_back(rest[r]);
        const double mass = prefix_exclusive_correct(point, greedy, greedy.size() - 1);
        greedy.pop_back();
        if (mass > pick_mass) {
          pick_mass = mass;
          pick = r;
        }
      }
      greedy.push_back(rest[pick]);
      rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    try_order(greedy);
  }
  return best;
}

std::vector<MinimizeResult> minimize_batch(std::span<const ConditionalPoint> points,
                                           const SurrogateSpec& spec,
                                           const OptimizerConfig& config, std::uint64_t seed,
                                           std::size_t jobs) {
  std::vector<MinimizeResult> out(points.size());
  parallel_for(points.size(), jobs, [&](std::size_t i) {
    out[i] = minimize_with_restarts(points[i], spec, config, derive_seed(seed, "minimize", i));
  });
  return out;
}

void write_trace_csv(const std::vector<TraceRow>& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.precision(17);
  out << "iter,risk,grad_norm\n";
  for (const auto& row : trace) out << row.iter << ',' << row.risk << ',' << row.grad_norm << '\n';
}

}  // namespace picce
