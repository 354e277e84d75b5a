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
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cfdrive/common.hpp"
#include "cfdrive/config.hpp"
#include "cfdrive/rng.hpp"

namespace cfdrive {

using Waypoint = Vec2;

struct RouteProjection {
  double s = 0.0;        // arc length, extrapolated past either end
  double lateral = 0.0;  // signed offset, left positive
};

/// Polyline route with cumulative arc lengths. Immutable once built.
class Route {
 public:
  explicit Route(std::vector<Waypoint> points);

  const std::vector<Waypoint>& points() const { return points_; }
  double length() const { return cumulative_.back(); }

  /// Point at arc length s; linear extrapolation beyond the ends.
  Vec2 point_at(double s) const;
  double heading_at(double s) const;
  /// Point at arc length s shifted laterally (left positive).
  Vec2 offset_point(double s, double lateral) const;
  RouteProjection project(Vec2 p) const;

  friend bool operator==(const Route& a, const Route& b) { return a.points_ == b.points_; }

 private:
  std::size_t segment_for(double s) const;

  std::vector<Waypoint> points_;
  std::vector<double> cumulative_;
};

struct EgoState {
  Vec2 position;
  double heading = 0.0;
  double speed = 0.0;
  friend bool operator==(const EgoState&, const EgoState&) = default;
};

enum class ActorKind : int { kVehicle = 1, kPedestrian = 2, kCyclist = 3 };
enum class Behavior : int { kStatic = 0, kCruise = 1, kCrossing = 2 };
enum class LightPhase : int { kRed = 0, kYellow = 1, kGreen = 2 };

/// Scripted motion parameters. Cruise actors optionally track the route;
/// crossing actors wait for the ego to come within trigger_distance (along
/// the route) and then walk along their heading until |lateral| passes
/// stop_lateral on the far side.
struct ActorScript {
  double cruise_speed = 0.0;
  double pause_start = -1.0;
  double pause_end = -1.0;
  bool follow_route = false;
  double lateral_offset = 0.0;
  double trigger_distance = 0.0;
  double crossing_speed = 0.0;
  double stop_lateral = 0.0;
  bool triggered = false;
  bool finished = false;
  friend bool operator==(const ActorScript&, const ActorScript&) = default;
};

struct Actor {
  int id = 0;
  ActorKind kind = ActorKind::kVehicle;
  Vec2 position;
  double heading = 0.0;
  double speed = 0.0;
  Behavior behavior = Behavior::kStatic;
  ActorScript script;
  friend bool operator==(const Actor&, const Actor&) = default;
};

struct TrafficLight {
  int id = 0;
  Vec2 stop_line;
  LightPhase phase = LightPhase::kGreen;
  double phase_timer = 0.0;  // seconds spent in the current phase
  friend bool operator==(const TrafficLight&, const TrafficLight&) = default;
};

enum class ScenarioTemplate : int {
  kClearRoad = 0,
  kLeadVehicle = 1,
  kRedLight = 2,
  kCrossingPedestrian = 3,
  kOccludedPedestrian = 4,
  kMixed = 5,
};

inline constexpr std::array<ScenarioTemplate, 6> kAllTemplates = {
    ScenarioTemplate::kClearRoad,          ScenarioTemplate::kLeadVehicle,
    ScenarioTemplate::kRedLight,           ScenarioTemplate::kCrossingPedestrian,
    ScenarioTemplate::kOccludedPedestrian, ScenarioTemplate::kMixed};

std::string_view template_name(ScenarioTemplate t);
/// Throws Error(kUnknownTemplate).
ScenarioTemplate parse_template(std::string_view name);

struct WorldState {
  int time_step = 0;
  EgoState ego;
  std::vector<Actor> actors;
  std::vector<TrafficLight> lights;
  std::shared_ptr<const Route> route;
  double route_length = 0.0;
  int scenario_id = 0;
  std::uint64_t seed = 0;
  /// Furthest arc length reached by the ego centre.
  double progress = 0.0;
  bool offroad = false;

  friend bool operator==(const WorldState& a, const WorldState& b);
};

struct Control {
  double steer = 0.0;     // [-1, 1], left positive
  double throttle = 0.0;  // [0, 1]
  int brake = 0;          // {0, 1}
  friend bool operator==(const Control&, const Control&) = default;
};

enum class InfractionKind : int {
  kPedestrianCollision = 0,
  kVehicleCollision = 1,
  kLayoutCollision = 2,
  kRedLightViolation = 3,
  kOffroad = 4,
  kRouteTimeout = 5,
};
inline constexpr int kInfractionKinds = 6;
std::string_view infraction_name(InfractionKind k);

struct InfractionEvent {
  InfractionKind kind = InfractionKind::kVehicleCollision;
  int time_step = 0;
  int actor_id = -1;
  friend bool operator==(const InfractionEvent&, const InfractionEvent&) = default;
};

struct StepResult {
  WorldState world;
  std::vector<InfractionEvent> events;
};

/// Oriented rectangle used for footprints and occlusion tests.
struct Box {
  Vec2 center;
  double heading = 0.0;
  double half_length = 0.0;
  double half_width = 0.0;
};

bool boxes_overlap(const Box& a, const Box& b);
bool segment_hits_box(Vec2 p, Vec2 q, const Box& b);
Box ego_box(const EgoState& ego, const PhysicsConfig& cfg);
Box actor_box(const Actor& actor);

LightPhase phase_at(double t, const PhysicsConfig& cfg);
double phase_duration(LightPhase p, const PhysicsConfig& cfg);

WorldState spawn_scenario(ScenarioTemplate t, std::uint64_t seed, const SimConfig& cfg);
WorldState spawn_scenario(std::string_view template_name, std::uint64_t seed,
                          const SimConfig& cfg);

StepResult step(const WorldState& world, const Control& control, const SimConfig& cfg);

/// Steps until the route would be judged timed out.
int timeout_steps(const WorldState& world, const PhysicsConfig& cfg);

/// Arc-length coordinate of the ego centre.
double ego_arc(const WorldState& world);

// ---------------------------------------------------------------------------
// Sensors

enum class SensedKind : int { kNone = 0, kVehicle = 1, kPedestrian = 2, kCyclist = 3, kLight = 4 };
enum class VisiblePhase : int { kRed = 0, kYellow = 1, kGreen = 2, kUnknown = 3 };

struct Detection {
  double rel_x = 200.0;
  double rel_y = 0.0;
  double rel_heading = 0.0;
  double speed = 0.0;
  SensedKind kind = SensedKind::kNone;
  friend bool operator==(const Detection&, const Detection&) = default;
};

struct SensorObs {
  double ego_speed = 0.0;
  std::vector<Detection> detections;
  VisiblePhase visible_light_phase = VisiblePhase::kUnknown;
  std::vector<Waypoint> route_context;
  friend bool operator==(const SensorObs&, const SensorObs&) = default;
};

/// Rng stream for render_sensors at a given step of an episode.
inline Rng sensor_stream(std::uint64_t episode_seed, int time_step) {
  return Rng(derive_seed(episode_seed, static_cast<std::uint64_t>(time_step), 0x5E45ULL));
}

SensorObs render_sensors(const WorldState& world, const SensorConfig& cfg, Rng& rng);

}  // namespace cfdrive
