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
#include <string_view>

#include "cfdrive/common.hpp"

namespace cfdrive {

inline constexpr int kHorizon = 10;

enum class ActionClass : int { kGo = 0, kSlow = 1, kStop = 2 };
inline constexpr int kNumClasses = 3;

std::string_view class_name(ActionClass c);

/// Expert or learner output: ego-frame waypoints for the next kHorizon steps,
/// a signed acceleration command and a brake flag.
struct Action {
  std::array<Vec2, kHorizon> waypoints{};
  double accel = 0.0;
  int brake = 0;
  ActionClass class_hint = ActionClass::kGo;
  /// Expert rule that fired (1..4); 0 for non-expert actions.
  int rule = 0;

  /// Mean spacing between consecutive waypoints divided by dt.
  double target_speed(double dt) const;

  friend bool operator==(const Action&, const Action&) = default;
};

}  // namespace cfdrive
