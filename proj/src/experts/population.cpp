#include "picce/experts.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "picce/random.hpp"

namespace picce {

namespace {

void require_accuracy(double a, const char* what) {
  if (!(a >= 0.0 && a <= 1.0)) {
    throw std::invalid_argument(std::string(what) + " must be in [0,1]");
  }
}

std::size_t family_of(const ExpertPattern& pattern, std::size_t num_classes) {
  const std::size_t family = pattern.family_size == 0 ? num_classes : pattern.family_size;
  if (family > num_classes) throw std::invalid_argument("family larger than the label set");
  return family;
}

/// Accuracy row for an expert whose domain is `domain`: a_in on the domain,
/// a_family on the rest of the family, 1/K (random guess) elsewhere.
Vec domain_row(const std::vector<std::size_t>& domain, std::size_t family, std::size_t num_classes,
               double in_domain, double in_family) {
  Vec row(num_classes, 1.0 / static_cast<double>(num_classes));
  for (std::size_t y = 0; y < family; ++y) row[y] = in_family;
  for (std::size_t y : domain) row[y] = in_domain;
  return row;
}

/// Domain j = d consecutive family classes starting at j*d, wrapping around
/// the family once every class has been assigned.
std::vector<std::vector<std::size_t>> cyclic_domains(std::size_t num_experts, std::size_t size,
                                                     std::size_t family) {
  if (size == 0 || size > family) throw std::invalid_argument("domain size must be in [1, family]");
  std::vector<std::vector<std::size_t>> domains(num_experts);
  for (std::size_t j = 0; j < num_experts; ++j) {
    for (std::size_t i = 0; i < size; ++i) domains[j].push_back((j * size + i) % family);
  }
  return domains;
}

/// Family split into J near-equal blocks; each domain extends `overlap`
/// classes into the next block, and the last ends at the family boundary.
std::vector<std::vector<std::size_t>> overlapped_domains(std::size_t num_experts,
                                                         std::size_t overlap, std::size_t family) {
  if (num_experts > family) throw std::invalid_argument("more experts than family classes");
  if (num_experts > 1 && family / num_experts < overlap) {
    throw std::invalid_argument("overlap longer than the per-expert block");
  }
  std::vector<std::size_t> start(num_experts + 1);
  for (std::size_t j = 0; j <= num_experts; ++j) start[j] = j * family / num_experts;
  std::vector<std::vector<std::size_t>> domains(num_experts);
  for (std::size_t j = 0; j < num_experts; ++j) {
    const std::size_t end = j + 1 < num_experts ? start[j + 1] + overlap : family;
    for (std::size_t y = start[j]; y < end; ++y) domains[j].push_back(y);
  }
  return domains;
}

}  // namespace

std::string_view to_string(PatternKind kind) {
  switch (kind) {
    case PatternKind::DomainExpert: return "domain";
    case PatternKind::OverlappedDomain: return "overlapped";
    case PatternKind::VaryingAccuracy: return "varying";
    case PatternKind::Dominant: return "dominant";
    case PatternKind::AppendixExample1: return "example1";
    case PatternKind::AppendixExample2: return "example2";
    case PatternKind::Custom: return "custom";
  }
  return "?";
}

PatternKind parse_pattern_kind(std::string_view text) {
  for (auto kind : {PatternKind::DomainExpert, PatternKind::OverlappedDomain,
                    PatternKind::VaryingAccuracy, PatternKind::Dominant,
                    PatternKind::AppendixExample1, PatternKind::AppendixExample2,
                    PatternKind::Custom}) {
    if (to_string(kind) == text) return kind;
  }
  throw std::invalid_argument("unknown expert pattern '" + std::string(text) + "'");
}

ExpertJointModel ExpertPopulation::joint_model() const {
  Matrix cond(num_classes, Vec(num_experts()));
  for (std::size_t j = 0; j < num_experts(); ++j) {
    for (std::size_t y = 0; y < num_classes; ++y) cond[y][j] = accuracy[j][y];
  }
  return ExpertJointModel::independent(num_classes, std::move(cond));
}

ConditionalPoint ExpertPopulation::with_posterior(Vec posterior) const {
  return ConditionalPoint(std::move(posterior), joint_model());
}

ExpertPopulation build_expert_population(const ExpertPattern& pattern, std::size_t num_experts,
                                         std::size_t num_classes, std::uint64_t seed) {
  if (num_classes < 2) throw std::invalid_argument("need at least two classes");
  require_accuracy(pattern.in_domain_accuracy, "in-domain accuracy");
  require_accuracy(pattern.family_accuracy, "family accuracy");
  ExpertPopulation pop;
  pop.num_classes = num_classes;

  switch (pattern.kind) {
    case PatternKind::DomainExpert: {
      const std::size_t family = family_of(pattern, num_classes);
      pop.domains = cyclic_domains(num_experts, pattern.domain_size, family);
      for (const auto& d : pop.domains) {
        pop.accuracy.push_back(domain_row(d, family, num_classes, pattern.in_domain_accuracy,
                                          pattern.family_accuracy));
      }
      break;
    }
    case PatternKind::OverlappedDomain: {
      const std::size_t family = family_of(pattern, num_classes);
      pop.domains = overlapped_domains(num_experts, pattern.overlap, family);
      for (const auto& d : pop.domains) {
        pop.accuracy.push_back(domain_row(d, family, num_classes, pattern.in_domain_accuracy,
                                          pattern.family_accuracy));
      }
      break;
    }
    case PatternKind::VaryingAccuracy: {
      require_accuracy(pattern.accuracy_lo, "accuracy range");
      require_accuracy(pattern.accuracy_hi, "accuracy range");
      if (pattern.accuracy_lo > pattern.accuracy_hi) {
        throw std::invalid_argument("accuracy range is reversed");
      }
      const std::size_t family = family_of(pattern, num_classes);
      pop.domains = cyclic_domains(num_experts, pattern.domain_size, family);
      for (std::size_t j = 0; j < num_experts; ++j) {
        const double frac =
            num_experts > 1 ? static_cast<double>(j) / static_cast<double>(num_experts - 1) : 0.0;
        const double a_in = pattern.accuracy_lo + frac * (pattern.accuracy_hi - pattern.accuracy_lo);
        pop.accuracy.push_back(
            domain_row(pop.domains[j], family, num_classes, a_in, pattern.family_accuracy));
      }
      break;
    }
    case PatternKind::Dominant: {
      if (num_experts == 0) throw std::invalid_argument("dominant pattern needs an expert");
      if (pattern.family_accuracy > pattern.in_domain_accuracy) {
        throw std::invalid_argument("dominant expert must be at least as accurate as its peers");
      }
      const std::size_t family = family_of(pattern, num_classes);
      pop.accuracy.push_back(Vec(num_classes, pattern.in_domain_accuracy));
      pop.domains.emplace_back();
      for (std::size_t y = 0; y < num_classes; ++y) pop.domains.back().push_back(y);
      const auto peers = cyclic_domains(num_experts - 1, pattern.domain_size, family);
      for (const auto& d : peers) {
        auto row = domain_row(d, family, num_classes, pattern.in_domain_accuracy,
                              pattern.family_accuracy);
        for (double& a : row) a = std::min(a, pattern.in_domain_accuracy);
        pop.accuracy.push_back(std::move(row));
        pop.domains.push_back(d);
      }
      break;
    }
    case PatternKind::AppendixExample1: {
      if (num_experts == 0) throw std::invalid_argument("dominant pattern needs an expert");
      std::mt19937_64 rng(seed);
      Vec dominant(num_classes);
      for (double& a : dominant) a = 0.5 + 0.45 * uniform01(rng);
      pop.accuracy.push_back(dominant);
      for (std::size_t j = 1; j < num_experts; ++j) {
        Vec row(num_classes);
        for (std::size_t y = 0; y < num_classes; ++y) {
          row[y] = dominant[y] * (0.3 + 0.7 * uniform01(rng));
        }
        pop.accuracy.push_back(std::move(row));
      }
      break;
    }
    case PatternKind::AppendixExample2: {
      if (num_classes != 3 || num_experts != 3) {
        throw std::invalid_argument("the fixed example table has K = 3 and J = 3");
      }
      pop.accuracy = {{0.9, 0.4, 0.4}, {0.6, 0.9, 0.9}, {0.6, 0.9, 0.9}};
      break;
    }
    case PatternKind::Custom: {
      if (pattern.custom_accuracy.size() != num_experts) {
        throw std::invalid_argument("custom table needs one row per expert");
      }
      for (const auto& row : pattern.custom_accuracy) {
        if (row.size() != num_classes) throw std::invalid_argument("custom row needs K entries");
        for (double a : row) require_accuracy(a, "custom accuracy");
      }
      pop.accuracy = pattern.custom_accuracy;
      break;
    }
  }
  return pop;
}

std::vector<std::size_t> sample_expert_labels(const ExpertPopulation& population, std::size_t y,
                                              std::mt19937_64& rng) {
  const std::size_t num_classes = population.num_classes;
  if (y >= num_classes) throw std::out_of_range("label out of range");
  std::vector<std::size_t> preds(population.num_experts());
  for (std::size_t j = 0; j < preds.size(); ++j) {
    if (uniform01(rng) < population.accuracy[j][y]) {
      preds[j] = y;
      continue;
    }
    auto wrong = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(num_classes - 1));
    wrong = std::min(wrong, num_classes - 2);
    preds[j] = wrong >= y ? wrong + 1 : wrong;
  }
  return preds;
}

std::vector<BestInSet> aggregate_best_in_set(std::span<const ConditionalPoint> points,
                                             std::span<const std::size_t> small_set,
                                             std::span<const std::size_t> large_set) {
  for (std::size_t j : small_set) {
    if (std::find(large_set.begin(), large_set.end(), j) == large_set.end()) {
      throw std::invalid_argument("first expert set is not contained in the second");
    }
  }
  std::vector<BestInSet> out;
  out.reserve(points.size());
  for (const auto& point : points) {
    BestInSet best;
    for (std::size_t j : small_set) best.best_small = std::max(best.best_small, expert_accuracy(point, j));
    for (std::size_t j : large_set) best.best_large = std::max(best.best_large, expert_accuracy(point, j));
    if (best.best_large < best.best_small) {
      throw std::logic_error("best accuracy decreased when enlarging the expert set");
    }
    out.push_back(best);
  }
  return out;
}

nlohmann::json population_to_json(const ExpertPopulation& population) {
  nlohmann::json doc;
  doc["K"] = population.num_classes;
  doc["J"] = population.num_experts();
  doc["kind"] = "independent";
  Matrix cond(population.num_classes, Vec(population.num_experts()));
  for (std::size_t j = 0; j < population.num_experts(); ++j) {
    for (std::size_t y = 0; y < population.num_classes; ++y) cond[y][j] = population.accuracy[j][y];
  }
  doc["cond_accuracy"] = cond;
  if (!population.domains.empty()) doc["domains"] = population.domains;
  return doc;
}

ExpertPopulation population_from_json(const nlohmann::json& doc) {
  try {
    ExpertPopulation pop;
    pop.num_classes = doc.at("K").get<std::size_t>();
    const auto num_experts = doc.at("J").get<std::size_t>();
    if (doc.at("kind").get<std::string>() != "independent") {
      throw std::invalid_argument("populations use the independent expert form");
    }
    const auto cond = doc.at("cond_accuracy").get<Matrix>();
    if (cond.size() != pop.num_classes) throw std::invalid_argument("cond_accuracy needs K rows");
    pop.accuracy.assign(num_experts, Vec(pop.num_classes));
    for (std::size_t y = 0; y < pop.num_classes; ++y) {
      if (cond[y].size() != num_experts) throw std::invalid_argument("cond_accuracy needs J columns");
      for (std::size_t j = 0; j < num_experts; ++j) {
        require_accuracy(cond[y][j], "conditional accuracy");
        pop.accuracy[j][y] = cond[y][j];
      }
    }
    if (doc.contains("domains")) {
      pop.domains = doc.at("domains").get<std::vector<std::vector<std::size_t>>>();
    }
    return pop;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed population: ") + e.what());
  }
}

}  // namespace picce
