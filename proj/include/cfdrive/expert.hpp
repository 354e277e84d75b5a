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

/// Priority rules, evaluated in order; exactly one fires per call.
enum class ExpertRule : int {
  kVulnerableInCorridor = 1,  // pedestrian or cyclist in the forward corridor
  kTrafficLight = 2,          // red, or stoppable yellow, within trigger distance
  kLeadActor = 3,             // lead vehicle/cyclist too close
  kCruise = 4,
};

/// Privileged rule-based driver. Pure function of the world state.
Action expert_act(const WorldState& world, const SimConfig& cfg);

/// Waypoints for a constant-deceleration stop clipped at `stop_distance`
/// metres of travel along the route.
std::array<Vec2, kHorizon> stop_profile(const WorldState& world, double stop_distance,
                                        const PhysicsConfig& cfg);

/// Waypoints spaced at `speed * dt` along the route.
std::array<Vec2, kHorizon> speed_profile(const WorldState& world, double speed,
                                         const PhysicsConfig& cfg);

}  // namespace cfdrive
