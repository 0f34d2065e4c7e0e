#include <cmath>
#include <stdexcept>

#include "picce/optim.hpp"

namespace picce {

ScorePath linear_path(Vec from, Vec to) {
  if (from.size() != to.size()) throw std::invalid_argument("path endpoints differ in length");
  return [from = std::move(from), to = std::move(to)](double t) {
    Vec out(from.size());
    for (std::size_t i = 0; i < from.size(); ++i) out[i] = from[i] + t * (to[i] - from[i]);
    return out;
  };
}

ContinuityReport continuity_probe(std::size_t y, std::span<const std::size_t> m, BaseLoss base,
                                  const ScorePath& path, std::size_t n_steps) {
  if (n_steps == 0) throw std::invalid_argument("continuity probe needs at least one step");
  if (path(0.0) == path(1.0) && path(0.0) == path(0.5)) {
    throw std::invalid_argument("degenerate (constant) score path");
  }
  ContinuityReport report;
  report.step = 1.0 / static_cast<double>(n_steps);

  Vec theta = path(0.0);
  double prev_pce = pce_surrogate(theta, y, m, base);
  double prev_picce = picce_surrogate(theta, y, m, base);
  for (std::size_t i = 1; i <= n_steps; ++i) {
    theta = path(static_cast<double>(i) / static_cast<double>(n_steps));
    const double pce = pce_surrogate(theta, y, m, base);
    const double picce = picce_surrogate(theta, y, m, base);
    report.pce.max_jump = std::max(report.pce.max_jump, std::abs(pce - prev_pce));
    report.picce.max_jump = std::max(report.picce.max_jump, std::abs(picce - prev_picce));
    prev_pce = pce;
    prev_picce = picce;
  }
  report.pce.jump_ratio = report.pce.max_jump / report.step;
  report.picce.jump_ratio = report.picce.max_jump / report.step;
  return report;
}

}  // namespace picce
