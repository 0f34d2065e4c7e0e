#include "picce/fixture.hpp"

#include <fstream>

namespace picce {

using nlohmann::json;

json point_to_json(const ConditionalPoint& point) {
  const auto& model = point.experts();
  json doc;
  doc["K"] = point.num_classes();
  doc["J"] = point.num_experts();
  doc["posterior"] = point.posterior();
  if (model.kind() == ExpertModelKind::ConditionallyIndependent) {
    doc["kind"] = "independent";
    doc["cond_accuracy"] = model.cond_accuracy_table();
  } else {
    doc["kind"] = "full_joint";
    json patterns = json::array();
    const auto& table = model.pattern_table();
    for (std::size_t y = 0; y < table.size(); ++y) {
      for (std::size_t mask = 0; mask < table[y].size(); ++mask) {
        if (table[y][mask] != 0.0) {
          patterns.push_back({{"label", y}, {"mask", mask}, {"prob", table[y][mask]}});
        }
      }
    }
    doc["patterns"] = std::move(patterns);
  }
  if (model.has_custom_wrong_profile()) doc["wrong_label_profile"] = model.wrong_profile();
  return doc;
}

ConditionalPoint point_from_json(const json& doc) {
  try {
    const auto num_classes = doc.at("K").get<std::size_t>();
    const auto num_experts = doc.at("J").get<std::size_t>();
    auto posterior = doc.at("posterior").get<Vec>();
    std::vector<Matrix> profile;
    if (doc.contains("wrong_label_profile")) {
      profile = doc.at("wrong_label_profile").get<std::vector<Matrix>>();
    }
    const auto kind = doc.at("kind").get<std::string>();
    if (kind == "independent") {
      auto acc = doc.at("cond_accuracy").get<Matrix>();
      if (!acc.empty() && acc.front().size() != num_experts) {
        throw std::invalid_argument("cond_accuracy column count does not match J");
      }
      auto model = ExpertJointModel::independent(num_classes, std::move(acc), std::move(profile));
      return ConditionalPoint(std::move(posterior), std::move(model));
    }
    if (kind == "full_joint") {
      if (num_experts > kMaxPatternExperts) {
        throw std::invalid_argument("full_joint fixtures support at most 20 experts");
      }
      Matrix table(num_classes, Vec(std::size_t{1} << num_experts, 0.0));
      for (const auto& entry : doc.at("patterns")) {
        const auto y = entry.at("label").get<std::size_t>();
        const auto mask = entry.at("mask").get<std::size_t>();
        if (y >= num_classes || mask >= table[y].size()) {
          throw std::invalid_argument("pattern entry out of range");
        }
        table[y][mask] += entry.at("prob").get<double>();
      }
      auto model = ExpertJointModel::full_joint(num_classes, num_experts, std::move(table),
                                                std::move(profile));
      return ConditionalPoint(std::move(posterior), std::move(model));
    }
    throw std::invalid_argument("unknown expert model kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed fixture: ") + e.what());
  }
}

ConditionalPoint load_point(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open fixture " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
  try {
    return point_from_json(doc);
  } catch (const std::exception& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

void save_point(const ConditionalPoint& point, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << point_to_json(point).dump(2) << '\n';
}

PathFixture load_path_fixture(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open fixture " + path.string());
  try {
    const auto doc = json::parse(in);
    PathFixture f;
    f.num_classes = doc.at("K").get<std::size_t>();
    f.label = doc.at("label").get<std::size_t>();
    f.expert_preds = doc.at("expert_preds").get<std::vector<std::size_t>>();
    const auto base = doc.at("base").get<std::string>();
    if (base == "ce") {
      f.base = BaseLoss::CE;
    } else if (base == "ova") {
      f.base = BaseLoss::OvaLog;
    } else {
      throw std::invalid_argument("unknown base loss '" + base + "'");
    }
    f.from = doc.at("from").get<Vec>();
    f.to = doc.at("to").get<Vec>();
    const std::size_t dim = f.num_classes + f.expert_preds.size();
    if (f.from.size() != dim || f.to.size() != dim) {
      throw std::invalid_argument("path endpoints must have K + J entries");
    }
    if (f.label >= f.num_classes) throw std::invalid_argument("label out of range");
    for (auto m : f.expert_preds) {
      if (m >= f.num_classes) throw std::invalid_argument("expert prediction out of range");
    }
    return f;
  } catch (const json::exception& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

}  // namespace picce
