#pragma once

// Per-point minimization of conditional risks over theta in R^{K+J}, plus
// the continuity probe that separates PCE from PiCCE.

#include <cstdint>
#include <functional>
#include <span>

#include "picce/core.hpp"
#include "picce/losses.hpp"

namespace picce {

struct OptimizerConfig {
  std::size_t max_iters = 20000;
  double step_size = 0.5;
  double grad_tolerance = 1e-8;
  bool use_line_search = true;
  bool newton = true;           // Newton directions on the free coordinates
  double backtrack = 0.5;       // step shrink factor
  double armijo = 1e-4;         // sufficient decrease constant
  double score_clamp = 30.0;    // iterates are projected onto [-clamp, clamp]

  void validate() const;
};

/// Analytic gradient of the conditional risk. For PCE/PiCCE the expert
/// weights are those of the canonical order at theta, which is the exact
/// gradient away from expert-score ties.
Vec risk_gradient(const ConditionalPoint& point, std::span<const double> theta,
                  const SurrogateSpec& spec);

enum class OptStatus { Converged, NonConvergence };

struct TraceRow {
  std::size_t iter = 0;
  double risk = 0.0;
  double grad_norm = 0.0;
};

struct MinimizeResult {
  Vec theta;
  double risk = 0.0;
  OptStatus status = OptStatus::NonConvergence;
  double grad_norm = 0.0;
  std::size_t iterations = 0;
  std::vector<TraceRow> trace;
};

/// Zeros plus uniform jitter in [-1e-3, 1e-3], so expert scores start untied.
Vec initial_scores(std::size_t dim, std::uint64_t seed);

/// Projected Newton (or plain gradient) descent with optional Armijo
/// backtracking. Under CE the first coordinate is pinned to zero. Stops when
/// the projected gradient norm drops below grad_tolerance.
MinimizeResult minimize_conditional_risk(const ConditionalPoint& point, const SurrogateSpec& spec,
                                         const OptimizerConfig& config, Vec theta_init);

/// Selector-based risks are piecewise in the expert ordering and can have
/// a local minimum per expert ordering. Runs from the jittered zero start and
/// from one start per ordering (every ordering up to six experts, otherwise
/// each leading expert with a greedy tail), keeping the lowest risk.
MinimizeResult minimize_with_restarts(const ConditionalPoint& point, const SurrogateSpec& spec,
                                      const OptimizerConfig& config, std::uint64_t seed);

/// minimize_with_restarts over many points on `jobs` threads. Point i uses
/// the jitter seed derive_seed(seed, "minimize", i).
std::vector<MinimizeResult> minimize_batch(std::span<const ConditionalPoint> points,
                                           const SurrogateSpec& spec,
                                           const OptimizerConfig& config, std::uint64_t seed,
                                           std::size_t jobs);

/// Writes "iter,risk,grad_norm" rows.
void write_trace_csv(const std::vector<TraceRow>& trace, const std::string& path);

using ScorePath = std::function<Vec(double)>;

/// Straight segment from `from` (t = 0) to `to` (t = 1).
ScorePath linear_path(Vec from, Vec to);

struct JumpStats {
  double max_jump = 0.0;     // largest |loss(t_{i+1}) - loss(t_i)|
  double jump_ratio = 0.0;   // max_jump / step
};

struct ContinuityReport {
  double step = 0.0;
  JumpStats pce;
  JumpStats picce;
};

/// Evaluates both selector-based surrogates at n_steps + 1 equally spaced
/// points of the path for a fixed (y, m).
ContinuityReport continuity_probe(std::size_t y, std::span<const std::size_t> m, BaseLoss base,
                                  const ScorePath& path, std::size_t n_steps);

}  // namespace picce
