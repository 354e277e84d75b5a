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

#include "cfdrive/action.hpp"
#include "cfdrive/config.hpp"
#include "cfdrive/world.hpp"

namespace cfdrive {

/// Waypoint-tracking controller. Lateral PID acts on the heading error to the
/// first waypoint at least min_lookahead ahead; longitudinal PID on the gap
/// between the action's implied target speed and the ego speed. Integrators
/// are clamped to +-integral_limit. Holds state, one instance per episode.
class PidController {
 public:
  explicit PidController(PidConfig cfg = {}, PhysicsConfig physics = {})
      : cfg_(cfg), physics_(physics) {}

  Control operator()(const WorldState& world, const Action& action);
  void reset();

 private:
  PidConfig cfg_;
  PhysicsConfig physics_;
  double lat_integral_ = 0.0;
  double lat_prev_ = 0.0;
  double lon_integral_ = 0.0;
  double lon_prev_ = 0.0;
  bool primed_ = false;
};

}  // namespace cfdrive
