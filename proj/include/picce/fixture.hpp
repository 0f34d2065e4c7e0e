#pragma once

// JSON fixture format for ConditionalPoint.
//
//   {
//     "K": 3, "J": 3,
//     "posterior": [0.8, 0.1, 0.1],
//     "kind": "independent",               // or "full_joint"
//     "cond_accuracy": [[0.9, 0.6, 0.6],   // one row per label, one column per expert
//                       [0.4, 0.9, 0.9],
//                       [0.4, 0.9, 0.9]],
//     "patterns": [ {"label": 0, "mask": 5, "prob": 0.25}, ... ],   // full_joint only
//     "wrong_label_profile": [[[...K...] x K] x J]                  // optional
//   }
//
// Pattern entries that are not listed have probability 0. Bit j of "mask"
// means expert j is correct.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "picce/core.hpp"
#include "picce/losses.hpp"

namespace picce {

nlohmann::json point_to_json(const ConditionalPoint& point);
ConditionalPoint point_from_json(const nlohmann::json& doc);

ConditionalPoint load_point(const std::filesystem::path& path);
void save_point(const ConditionalPoint& point, const std::filesystem::path& path);

/// A fixed (y, m) sample and a straight score path between two endpoints:
///   {"K": 3, "label": 0, "expert_preds": [0, 1], "base": "ce",
///    "from": [...K+J...], "to": [...K+J...]}
struct PathFixture {
  std::size_t num_classes = 0;
  std::size_t label = 0;
  std::vector<std::size_t> expert_preds;
  BaseLoss base = BaseLoss::CE;
  Vec from;
  Vec to;
};

PathFixture load_path_fixture(const std::filesystem::path& path);

}  // namespace picce
