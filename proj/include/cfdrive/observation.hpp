// Copyright 2026 The cfdrive Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "cfdrive/action.hpp"
#include "cfdrive/config.hpp"
#include "cfdrive/world.hpp"

namespace cfdrive {

inline constexpr int kSlots = 4;
inline constexpr int kSlotWidth = 6;
inline constexpr int kFeatureCount = 1 + kSlots * kSlotWidth;  // 25
inline constexpr double kSentinelX = 200.0;

using FeatureVector = std::array<double, kFeatureCount>;

enum class KindCode : int { kNone = 0, kVehicle = 1, kPedestrian = 2, kCyclist = 3, kTrafficLight = 4 };
/// 0 means "not a light".
enum class PhaseCode : int { kNotApplicable = 0, kGreen = 1, kYellow = 2, kRed = 3 };

enum class SlotField : int { kRelX = 0, kRelY = 1, kRelHeading = 2, kSpeed = 3, kKind = 4, kPhase = 5 };

inline constexpr int feature_index(int slot, SlotField field) {
  return 1 + slot * kSlotWidth + static_cast<int>(field);
}
inline constexpr int kEgoSpeedIndex = 0;

PhaseCode phase_code(LightPhase p);
LightPhase phase_from_code(PhaseCode c);

/// Ego speed plus the four nearest actors/lights in the ego frame, ordered by
/// distance. `source_ids` records which world entity filled each slot (-1 for
/// padding); it is bookkeeping and not part of the feature vector.
struct FilteredObs {
  FeatureVector features{};
  std::array<int, kSlots> source_ids{-1, -1, -1, -1};

  double ego_speed() const { return features[kEgoSpeedIndex]; }
  double at(int slot, SlotField f) const { return features[feature_index(slot, f)]; }
  double& at(int slot, SlotField f) { return features[feature_index(slot, f)]; }
  KindCode kind(int slot) const { return static_cast<KindCode>(static_cast<int>(at(slot, SlotField::kKind))); }
  bool is_sentinel(int slot) const { return kind(slot) == KindCode::kNone; }

  static FilteredObs from_features(std::span<const double> f);
  friend bool operator==(const FilteredObs&, const FilteredObs&) = default;
};

void set_sentinel(FilteredObs& o, int slot);

FilteredObs filter_observation(const WorldState& world);

ActionClass discretize_action(const Action& action, const SimConfig& cfg);

struct FeatureInfo {
  std::string name;
  int index = 0;
  std::string unit;
  /// Never altered by the counterfactual search.
  bool frozen = false;
  /// Categorical code; candidates are rounded to integers.
  bool integer = false;
};

const std::vector<FeatureInfo>& feature_schema();

}  // namespace cfdrive
