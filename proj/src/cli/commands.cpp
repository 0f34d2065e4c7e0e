#include "picce/commands.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "picce/consistency.hpp"
#include "picce/csv.hpp"
#include "picce/fixture.hpp"
#include "picce/generators.hpp"
#include "picce/parallel.hpp"
#include "picce/random.hpp"
#include "picce/risk.hpp"

namespace picce {

namespace {

constexpr double kRecoveryTolerance = 1e-3;
constexpr double kBoundaryBand = 0.02;
constexpr double kIdentityTolerance = 1e-12;
constexpr double kDecisiveVTildeGap = 0.05;

struct NamedPoint {
  std::string name;
  ConditionalPoint point;
};

std::vector<NamedPoint> load_fixtures(const RunConfig& config) {
  std::vector<NamedPoint> out;
  for (const auto& path : config.fixtures) {
    try {
      out.push_back({path.stem().string(), load_point(path)});
    } catch (const std::exception& e) {
      throw ConfigError(std::string("fixture rejected: ") + e.what());
    }
  }
  return out;
}

std::string path_in(const RunConfig& config, const char* file) {
  return (config.out_dir / file).string();
}

const SurrogateSpec kAllSpecs[] = {
    {Family::Vanilla, BaseLoss::CE}, {Family::Vanilla, BaseLoss::OvaLog},
    {Family::PCE, BaseLoss::CE},     {Family::PCE, BaseLoss::OvaLog},
    {Family::PiCCE, BaseLoss::CE},   {Family::PiCCE, BaseLoss::OvaLog},
};

std::string join(std::span<const std::size_t> items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(items[i]);
  }
  return out;
}

}  // namespace

void prepare_output_dir(const RunConfig& config) {
  std::error_code ec;
  std::filesystem::create_directories(config.out_dir, ec);
  if (ec || !std::filesystem::is_directory(config.out_dir)) {
    throw ConfigError("key 'out_dir': cannot create output directory " + config.out_dir.string());
  }
  const auto echo = config.out_dir / "effective_config.toml";
  std::ofstream out(echo);
  out << echo_run_config(config);
  if (!out) throw ConfigError("key 'out_dir': output directory is not writable: " + config.out_dir.string());
}

int cmd_verify_risks(const RunConfig& config, std::ostream& log) {
  auto points = load_fixtures(config);
  if (config.max_experts == 0) throw ConfigError("key 'max_experts': must be at least 1");
  if (config.mc_samples < 2) throw ConfigError("key 'mc_samples': need at least 2 samples");
  prepare_output_dir(config);

  std::mt19937_64 rng(derive_seed(config.seed, "verify-risks/points"));
  for (std::size_t i = 0; i < config.random_points; ++i) {
    const auto kind = i % 2 == 0 ? ExpertModelKind::ConditionallyIndependent : ExpertModelKind::FullJoint;
    const std::size_t num_classes = 2 + i % 4;
    const std::size_t num_experts = 1 + i % config.max_experts;
    points.push_back({"random-" + std::to_string(i), random_point(num_classes, num_experts, kind, rng)});
  }

  struct RiskRow {
    SurrogateSpec spec;
    std::size_t num_experts;
    double risk;
    McEstimate mc;
    bool pass;
  };
  std::vector<std::vector<RiskRow>> results(points.size());
  parallel_for(points.size(), config.jobs, [&](std::size_t i) {
    const auto& point = points[i].point;
    std::mt19937_64 theta_rng(derive_seed(config.seed, "verify-risks/theta", i));
    const auto theta = random_scores(point.num_classes() + point.num_experts(), 2.0, theta_rng);
    for (std::size_t s = 0; s < std::size(kAllSpecs); ++s) {
      const auto& spec = kAllSpecs[s];
      const double risk = conditional_risk(point, theta, spec);
      const auto mc = monte_carlo_risk(point, theta, spec, config.mc_samples,
                                       derive_seed(config.seed, "verify-risks/mc", i * 16 + s));
      const double slack = std::max(3.0 * mc.standard_error, 1e-12 * std::max(1.0, std::abs(risk)));
      results[i].push_back({spec, point.num_experts(), risk, mc, std::abs(risk - mc.estimate) <= slack});
    }
  });

  bool ok = true;
  CsvWriter risks(path_in(config, "risks.csv"), {"family", "base", "J", "risk", "mc_estimate", "mc_se"});
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (const auto& r : results[i]) {
      risks.row({std::string(to_string(r.spec.family)), std::string(to_string(r.spec.base)),
                 std::to_string(r.num_experts), format_double(r.risk), format_double(r.mc.estimate),
                 format_double(r.mc.standard_error)});
      if (!r.pass) {
        ok = false;
        log << "FAIL risk " << points[i].name << ' ' << to_string(r.spec) << ": closed form "
            << r.risk << " vs " << r.mc.estimate << " +- " << r.mc.standard_error << '\n';
      }
    }
  }

  // Prefix-exclusive weights telescope to the union probability.
  std::vector<NamedPoint> identity_points = load_fixtures(config);
  std::mt19937_64 id_rng(derive_seed(config.seed, "verify-risks/identity"));
  for (std::size_t i = 0; i < config.identity_points; ++i) {
    const auto kind = i % 2 == 0 ? ExpertModelKind::ConditionallyIndependent : ExpertModelKind::FullJoint;
    const std::size_t num_experts = 1 + i % config.max_experts;
    identity_points.push_back(
        {"identity-" + std::to_string(i), random_point(2 + i % 4, num_experts, kind, id_rng)});
  }
  CsvWriter identity(path_in(config, "identity.csv"),
                     {"point", "J", "weight_sum", "union_prob", "abs_diff", "pass"});
  std::size_t identity_failures = 0;
  for (const auto& [name, point] : identity_points) {
    const auto theta = random_scores(point.num_classes() + point.num_experts(), 3.0, id_rng);
    const auto w = risk_weights(point, theta, Family::PiCCE);
    double total = 0.0;
    for (std::size_t j = 0; j < point.num_experts(); ++j) total += w[point.num_classes() + j];
    const double v = union_correct_prob(point);
    const bool pass = std::abs(total - v) <= kIdentityTolerance;
    if (!pass) ++identity_failures;
    identity.row({name, std::to_string(point.num_experts()), format_double(total), format_double(v),
                  format_double(std::abs(total - v)), pass ? "1" : "0"});
  }
  if (identity_failures) {
    ok = false;
    log << "FAIL identity: " << identity_failures << " points off by more than 1e-12\n";
  }
  log << "verify-risks: " << points.size() << " points x " << std::size(kAllSpecs)
      << " surrogates, " << identity_points.size() << " identity points: " << (ok ? "PASS" : "FAIL")
      << '\n';
  return ok ? kExitOk : kExitCheckFailed;
}

int cmd_verify_consistency(const RunConfig& config, std::ostream& log) {
  auto points = load_fixtures(config);
  prepare_output_dir(config);

  std::mt19937_64 rng(derive_seed(config.seed, "verify-consistency/points"));
  const std::size_t class_choices[] = {3, 5};
  const std::size_t expert_choices[] = {2, 3, 5};
  for (std::size_t i = 0; points.size() < config.fixtures.size() + config.random_points; ++i) {
    auto point = random_dominant_point(class_choices[i % 2], expert_choices[i % 3], rng);
    if (!clear_of_decision_boundaries(point, kBoundaryBand)) continue;
    points.push_back({"random-" + std::to_string(i), std::move(point)});
  }

  struct PointResult {
    Condition1Result condition1;
    std::vector<ConsistencyReport> reports;
    std::optional<Theorem2AResolution> resolution;
    double v = 0.0;
  };
  std::vector<PointResult> results(points.size());
  parallel_for(points.size(), config.jobs, [&](std::size_t i) {
    const auto& point = points[i].point;
    auto& out = results[i];
    const auto seed = derive_seed(config.seed, "verify-consistency/init", i);
    out.condition1 = check_condition1(point);
    out.v = union_correct_prob(point);
    for (auto base : {BaseLoss::CE, BaseLoss::OvaLog}) {
      out.reports.push_back(verify_consistency(point, base, config.optimizer, seed));
    }
    if (out.condition1.holds) {
      out.resolution = resolve_theorem2a_form(point, config.optimizer, kRecoveryTolerance, seed);
    }
  });

  bool ok = true;
  CsvWriter rows(path_in(config, "consistency.csv"),
                 {"point", "base", "condition1_holds", "bayes_decision", "learned_decision",
                  "decisions_match", "argmax_expert_match", "label_part_recovery_error",
                  "expert_accuracy_recovery_error", "deferral_mass_error", "converged",
                  "final_grad_norm", "decisive"});
  CsvWriter cond(path_in(config, "condition1.csv"),
                 {"point", "holds", "best_expert", "challenger", "subset", "gap"});
  CsvWriter resolution(path_in(config, "theorem2a.csv"),
                       {"point", "V", "v_tilde", "u_star", "acc_times_vtilde",
                        "acc_times_one_minus_vtilde", "winner", "decisive"});
  std::optional<Theorem2AForm> decisive_winner;

  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& name = points[i].name;
    const auto& res = results[i];
    const bool decisive = res.condition1.holds && clear_of_decision_boundaries(points[i].point, kBoundaryBand);
    for (const auto& r : res.reports) {
      rows.row({name, std::string(to_string(r.base)), r.condition1_holds ? "1" : "0",
                to_string(r.bayes_decision), to_string(r.learned_decision),
                r.decisions_match ? "1" : "0", r.argmax_expert_match ? "1" : "0",
                format_double(r.label_part_recovery_error),
                format_double(r.expert_accuracy_recovery_error),
                format_double(r.deferral_mass_error), r.converged ? "1" : "0",
                format_double(r.final_grad_norm), decisive ? "1" : "0"});
      if (!r.converged) {
        ok = false;
        log << "FAIL " << name << ' ' << to_string(r.base) << ": optimizer did not converge (grad norm "
            << r.final_grad_norm << ")\n";
      }
      if (!decisive) continue;
      const bool recovered =
          r.label_part_recovery_error < kRecoveryTolerance &&
          (r.base == BaseLoss::CE ? r.deferral_mass_error < kRecoveryTolerance
                                  : r.expert_accuracy_recovery_error < kRecoveryTolerance);
      if (!r.decisions_match || !r.argmax_expert_match || !recovered) {
        ok = false;
        log << "FAIL " << name << ' ' << to_string(r.base) << ": bayes " << to_string(r.bayes_decision)
            << " learned " << to_string(r.learned_decision) << ", label error "
            << r.label_part_recovery_error << '\n';
      }
    }
    if (res.condition1.holds) {
      cond.row({name, "1", std::to_string(res.condition1.best_expert), "", "", ""});
    } else {
      log << "note " << name << ": information-advantage condition fails with " << res.condition1.violations.size()
          << " witnesses\n";
      for (const auto& v : res.condition1.violations) {
        cond.row({name, "0", std::to_string(res.condition1.best_expert), std::to_string(v.expert),
                  join(v.subset), format_double(v.gap)});
      }
    }
    if (res.resolution) {
      const auto& r = *res.resolution;
      const double v_tilde = res.v / (1.0 + res.v);
      const bool informative = std::abs(v_tilde - 0.5) > kDecisiveVTildeGap;
      resolution.row({name, format_double(res.v), format_double(v_tilde), format_double(r.u_star),
                      format_double(r.candidate_a), format_double(r.candidate_b),
                      std::string(to_string(r.winner)), informative ? "1" : "0"});
      if (r.inconsistent) {
        ok = false;
        log << "FAIL " << name << ": neither closed form matches u* = " << r.u_star << '\n';
      } else if (informative) {
        if (!decisive_winner) decisive_winner = r.winner;
        if (*decisive_winner != r.winner || r.winner == Theorem2AForm::Neither) {
          ok = false;
          log << "FAIL " << name << ": closed-form winner differs across points\n";
        }
      }
    }
  }
  log << "verify-consistency: " << points.size() << " points";
  if (decisive_winner) log << ", deferral-mass form " << to_string(*decisive_winner);
  log << ": " << (ok ? "PASS" : "FAIL") << '\n';
  return ok ? kExitOk : kExitCheckFailed;
}

int cmd_sweep(const RunConfig& config, std::ostream& log) {
  prepare_output_dir(config);
  std::vector<SweepRow> rows;
  try {
    rows = sweep_experts(config.sweep);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  write_sweep_csv(rows, path_in(config, "sweep.csv"));
  write_loss_curves_csv(rows, path_in(config, "loss_curves.csv"));

  CsvWriter summary(path_in(config, "summary.csv"),
                    {"family", "base", "J", "system_error_mean", "system_error_std", "coverage_mean",
                     "coverage_std", "classifier_accuracy_mean", "classifier_accuracy_std"});
  for (const auto& c : summarize(rows)) {
    summary.row({std::string(to_string(c.spec.family)), std::string(to_string(c.spec.base)),
                 std::to_string(c.num_experts), format_double(c.mean.system_error),
                 format_double(c.stddev.system_error), format_double(c.mean.coverage),
                 format_double(c.stddev.coverage), format_double(c.mean.classifier_accuracy),
                 format_double(c.stddev.classifier_accuracy)});
    log << to_string(c.spec) << " J=" << c.num_experts << ": system error " << c.mean.system_error
        << ", coverage " << c.mean.coverage << ", classifier accuracy " << c.mean.classifier_accuracy
        << '\n';
  }
  bool diverged = false;
  for (const auto& r : rows) {
    if (r.diverged) {
      diverged = true;
      log << "FAIL " << to_string(r.spec) << " J=" << r.num_experts << " trial " << r.trial
          << ": training diverged\n";
    }
  }
  return diverged ? kExitCheckFailed : kExitOk;
}

}  // namespace picce
