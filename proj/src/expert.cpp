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

#include "cfdrive/expert.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "cfdrive/observation.hpp"

namespace cfdrive {

namespace {

std::array<Vec2, kHorizon> along_route(const WorldState& world, const std::array<double, kHorizon>& offsets) {
  const Route& route = *world.route;
  const double s0 = route.project(world.ego.position).s;
  std::array<Vec2, kHorizon> out{};
  for (int k = 0; k < kHorizon; ++k) {
    out[k] = to_local(route.point_at(s0 + offsets[k]), world.ego.position, world.ego.heading);
  }
  return out;
}

struct Decision {
  ExpertRule rule = ExpertRule::kCruise;
  bool stop = false;
  double stop_distance = 0.0;
  double target_speed = 0.0;
};

std::optional<Decision> corridor_rule(const WorldState& w, double ego_s, const SimConfig& cfg) {
  const PhysicsConfig& p = cfg.physics;
  const ExpertConfig& e = cfg.expert;
  const double half_len = 0.5 * p.ego_length;
  const double half_band = 0.5 * (p.ego_width + e.corridor_margin);
  double nearest = std::numeric_limits<double>::infinity();
  double stop_at = 0.0;
  for (const Actor& a : w.actors) {
    if (a.kind != ActorKind::kPedestrian && a.kind != ActorKind::kCyclist) continue;
    const RouteProjection ap = w.route->project(a.position);
    const double ahead = ap.s - ego_s;
    if (ahead <= 0.0 || ahead > e.corridor_lookahead + half_len || std::abs(ap.lateral) > half_band) continue;
    if (ahead < nearest) {
      nearest = ahead;
      stop_at = ahead - half_len - actor_box(a).half_length - e.stop_buffer;
    }
  }
  if (!std::isfinite(nearest)) return std::nullopt;
  return Decision{ExpertRule::kVulnerableInCorridor, true, stop_at, 0.0};
}

std::optional<Decision> light_rule(const WorldState& w, double ego_s, const SimConfig& cfg) {
  const PhysicsConfig& p = cfg.physics;
  const double v = w.ego.speed;
  const double braking = v * v / (2.0 * p.a_max);
  const double front = ego_s + 0.5 * p.ego_length;
  double nearest = std::numeric_limits<double>::infinity();
  for (const TrafficLight& light : w.lights) {
    if (light.phase == LightPhase::kGreen) continue;
    const double d_front = w.route->project(light.stop_line).s - front;
    if (d_front < 0.0 || d_front > braking + cfg.expert.light_margin) continue;
    if (light.phase == LightPhase::kYellow && d_front < braking) continue;  // cannot stop: go
    nearest = std::min(nearest, d_front);
  }
  if (!std::isfinite(nearest)) return std::nullopt;
  return Decision{ExpertRule::kTrafficLight, true, nearest, 0.0};
}

std::optional<Decision> lead_rule(const WorldState& w, double ego_s, const SimConfig& cfg) {
  const PhysicsConfig& p = cfg.physics;
  const ExpertConfig& e = cfg.expert;
  const Actor* lead = nullptr;
  double lead_gap = std::numeric_limits<double>::infinity();
  for (const Actor& a : w.actors) {
    if (a.kind == ActorKind::kPedestrian) continue;
    const RouteProjection ap = w.route->project(a.position);
    const double ahead = ap.s - ego_s;
    if (ahead <= 0.0 || std::abs(ap.lateral) > p.lane_half_width) continue;
    const double gap = ahead - 0.5 * p.ego_length - actor_box(a).half_length;
    if (gap < lead_gap) {
      lead_gap = gap;
      lead = &a;
    }
  }
  if (lead == nullptr) return std::nullopt;
  const double v = w.ego.speed;
  const bool close = lead_gap < e.min_gap || (v > 0.0 && lead_gap / v < e.headway);
  if (!close) return std::nullopt;
  if (lead->speed < e.lead_stop_speed) {
    return Decision{ExpertRule::kLeadActor, true, lead_gap - e.stop_buffer, 0.0};
  }
  return Decision{ExpertRule::kLeadActor, false, 0.0,
                  std::min(lead->speed, e.slow_fraction * p.cruise_speed)};
}

}  // namespace

std::array<Vec2, kHorizon> stop_profile(const WorldState& world, double stop_distance,
                                        const PhysicsConfig& cfg) {
  std::array<double, kHorizon> offsets{};
  const double limit = std::max(0.0, stop_distance);
  double travelled = 0.0;
  for (int k = 0; k < kHorizon; ++k) {
    const double v = std::max(0.0, world.ego.speed - cfg.a_max * (k + 1) * cfg.dt);
    travelled += v * cfg.dt;
    offsets[k] = std::min(limit, travelled);
  }
  return along_route(world, offsets);
}

std::array<Vec2, kHorizon> speed_profile(const WorldState& world, double speed, const PhysicsConfig& cfg) {
  std::array<double, kHorizon> offsets{};
  for (int k = 0; k < kHorizon; ++k) offsets[k] = (k + 1) * speed * cfg.dt;
  return along_route(world, offsets);
}

Action expert_act(const WorldState& world, const SimConfig& cfg) {
  const PhysicsConfig& p = cfg.physics;
  const double ego_s = world.route->project(world.ego.position).s;

  Decision d{ExpertRule::kCruise, false, 0.0, p.cruise_speed};
  if (auto r1 = corridor_rule(world, ego_s, cfg)) {
    d = *r1;
  } else if (auto r2 = light_rule(world, ego_s, cfg)) {
    d = *r2;
  } else if (auto r3 = lead_rule(world, ego_s, cfg)) {
    d = *r3;
  }

  Action a;
  a.rule = static_cast<int>(d.rule);
  if (d.stop) {
    a.waypoints = stop_profile(world, d.stop_distance, p);
    a.brake = 1;
    a.accel = world.ego.speed > 0.0 ? -p.a_max : 0.0;
  } else {
    a.waypoints = speed_profile(world, d.target_speed, p);
    a.brake = 0;
    a.accel = std::clamp(d.target_speed - world.ego.speed, -p.a_max, p.a_max);
  }
  a.class_hint = discretize_action(a, cfg);
  return a;
}

}  // namespace cfdrive
