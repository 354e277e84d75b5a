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

#include "cfdrive/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace cfdrive {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kActorAccel = 3.0;

}  // namespace

// ---------------------------------------------------------------------------
// Route

Route::Route(std::vector<Waypoint> points) : points_(std::move(points)) {
  if (points_.size() < 2) throw Error(ErrorCode::kInvalidArgument, "route needs at least two points");
  cumulative_.reserve(points_.size());
  cumulative_.push_back(0.0);
  for (std::size_t i = 1; i < points_.size(); ++i) {
    const double len = (points_[i] - points_[i - 1]).norm();
    if (!(len > 0.0) || !std::isfinite(len))
      throw Error(ErrorCode::kInvalidArgument, "route segments must have positive finite length");
    cumulative_.push_back(cumulative_.back() + len);
  }
}

std::size_t Route::segment_for(double s) const {
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
  std::size_t i = it == cumulative_.begin() ? 0 : static_cast<std::size_t>(it - cumulative_.begin()) - 1;
  return std::min(i, points_.size() - 2);
}

Vec2 Route::point_at(double s) const {
  const std::size_t i = segment_for(s);
  const Vec2 d = points_[i + 1] - points_[i];
  const double len = cumulative_[i + 1] - cumulative_[i];
  return points_[i] + ((s - cumulative_[i]) / len) * d;
}

double Route::heading_at(double s) const {
  const std::size_t i = segment_for(s);
  const Vec2 d = points_[i + 1] - points_[i];
  return std::atan2(d.y, d.x);
}

Vec2 Route::offset_point(double s, double lateral) const {
  const double h = heading_at(s);
  return point_at(s) + lateral * Vec2{-std::sin(h), std::cos(h)};
}

RouteProjection Route::project(Vec2 p) const {
  RouteProjection best;
  double best_dist = std::numeric_limits<double>::infinity();
  const std::size_t last = points_.size() - 2;
  for (std::size_t i = 0; i <= last; ++i) {
    const Vec2 a = points_[i];
    const Vec2 d = points_[i + 1] - a;
    const double len = cumulative_[i + 1] - cumulative_[i];
    double t = (p - a).dot(d) / (len * len);
    if (i > 0) t = std::max(t, 0.0);
    if (i < last) t = std::min(t, 1.0);
    const Vec2 closest = a + t * d;
    const double dist = (p - closest).norm();
    if (dist < best_dist) {
      best_dist = dist;
      best.s = cumulative_[i] + t * len;
      best.lateral = (1.0 / len) * d.cross(p - a);
    }
  }
  return best;
}

bool operator==(const WorldState& a, const WorldState& b) {
  const bool routes_equal = (a.route == b.route) || (a.route && b.route && *a.route == *b.route);
  return a.time_step == b.time_step && a.ego == b.ego && a.actors == b.actors &&
         a.lights == b.lights && routes_equal && a.route_length == b.route_length &&
         a.scenario_id == b.scenario_id && a.seed == b.seed && a.progress == b.progress &&
         a.offroad == b.offroad;
}

// ---------------------------------------------------------------------------
// Geometry

namespace {

double box_radius(const Box& b, Vec2 axis) {
  const Vec2 u{std::cos(b.heading), std::sin(b.heading)};
  const Vec2 v{-u.y, u.x};
  return b.half_length * std::abs(axis.dot(u)) + b.half_width * std::abs(axis.dot(v));
}

}  // namespace

bool boxes_overlap(const Box& a, const Box& b) {
  const Vec2 delta = b.center - a.center;
  const std::array<Vec2, 4> axes = {
      Vec2{std::cos(a.heading), std::sin(a.heading)}, Vec2{-std::sin(a.heading), std::cos(a.heading)},
      Vec2{std::cos(b.heading), std::sin(b.heading)}, Vec2{-std::sin(b.heading), std::cos(b.heading)}};
  for (const Vec2& axis : axes) {
    if (std::abs(delta.dot(axis)) >= box_radius(a, axis) + box_radius(b, axis)) return false;
  }
  return true;
}

bool segment_hits_box(Vec2 p, Vec2 q, const Box& b) {
  const Vec2 lp = to_local(p, b.center, b.heading);
  const Vec2 lq = to_local(q, b.center, b.heading);
  const Vec2 d = lq - lp;
  double t0 = 0.0, t1 = 1.0;
  const std::array<std::pair<double, double>, 4> planes = {
      std::pair{-d.x, lp.x + b.half_length}, std::pair{d.x, b.half_length - lp.x},
      std::pair{-d.y, lp.y + b.half_width}, std::pair{d.y, b.half_width - lp.y}};
  for (const auto& [den, num] : planes) {
    if (den == 0.0) {
      if (num < 0.0) return false;
      continue;
    }
    const double t = num / den;
    if (den < 0.0) {
      t0 = std::max(t0, t);
    } else {
      t1 = std::min(t1, t);
    }
    if (t0 > t1) return false;
  }
  return true;
}

Box ego_box(const EgoState& ego, const PhysicsConfig& cfg) {
  return {ego.position, ego.heading, 0.5 * cfg.ego_length, 0.5 * cfg.ego_width};
}

Box actor_box(const Actor& actor) {
  switch (actor.kind) {
    case ActorKind::kVehicle: return {actor.position, actor.heading, 2.25, 1.0};
    case ActorKind::kPedestrian: return {actor.position, actor.heading, 0.3, 0.3};
    case ActorKind::kCyclist: return {actor.position, actor.heading, 0.9, 0.35};
  }
  return {actor.position, actor.heading, 0.5, 0.5};
}

double phase_duration(LightPhase p, const PhysicsConfig& cfg) {
  switch (p) {
    case LightPhase::kGreen: return cfg.light_green;
    case LightPhase::kYellow: return cfg.light_yellow;
    case LightPhase::kRed: return cfg.light_red;
  }
  return cfg.light_green;
}

namespace {

LightPhase next_phase(LightPhase p) {
  switch (p) {
    case LightPhase::kGreen: return LightPhase::kYellow;
    case LightPhase::kYellow: return LightPhase::kRed;
    case LightPhase::kRed: return LightPhase::kGreen;
  }
  return LightPhase::kGreen;
}

}  // namespace

LightPhase phase_at(double t, const PhysicsConfig& cfg) {
  const double cycle = cfg.light_green + cfg.light_yellow + cfg.light_red;
  double u = std::fmod(t, cycle);
  if (u < 0) u += cycle;
  if (u < cfg.light_green) return LightPhase::kGreen;
  if (u < cfg.light_green + cfg.light_yellow) return LightPhase::kYellow;
  return LightPhase::kRed;
}

std::string_view infraction_name(InfractionKind k) {
  switch (k) {
    case InfractionKind::kPedestrianCollision: return "pedestrian_collision";
    case InfractionKind::kVehicleCollision: return "vehicle_collision";
    case InfractionKind::kLayoutCollision: return "layout_collision";
    case InfractionKind::kRedLightViolation: return "red_light_violation";
    case InfractionKind::kOffroad: return "offroad";
    case InfractionKind::kRouteTimeout: return "route_timeout";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Scenario templates

std::string_view template_name(ScenarioTemplate t) {
  switch (t) {
    case ScenarioTemplate::kClearRoad: return "clear_road";
    case ScenarioTemplate::kLeadVehicle: return "lead_vehicle";
    case ScenarioTemplate::kRedLight: return "red_light";
    case ScenarioTemplate::kCrossingPedestrian: return "crossing_pedestrian";
    case ScenarioTemplate::kOccludedPedestrian: return "occluded_pedestrian";
    case ScenarioTemplate::kMixed: return "mixed";
  }
  return "unknown";
}

ScenarioTemplate parse_template(std::string_view name) {
  for (ScenarioTemplate t : kAllTemplates) {
    if (template_name(t) == name) return t;
  }
  throw Error(ErrorCode::kUnknownTemplate, "unknown scenario template '" + std::string(name) + "'");
}

namespace {

class ScenarioBuilder {
 public:
  ScenarioBuilder(ScenarioTemplate t, std::uint64_t seed, const SimConfig& cfg)
      : cfg_(cfg), rng_(derive_seed(seed, static_cast<std::uint64_t>(t), 0x5CE0ULL)) {
    world_.scenario_id = static_cast<int>(t);
    world_.seed = seed;
  }

  Rng& rng() { return rng_; }

  void straight_route(double length) {
    const double heading = rng_.uniform(-kPi, kPi);
    const Vec2 start{rng_.uniform(-50.0, 50.0), rng_.uniform(-50.0, 50.0)};
    set_route({start, start + length * Vec2{std::cos(heading), std::sin(heading)}});
  }

  /// Straight lead-in, circular arc, straight run-out.
  void curved_route(double lead_in, double radius, double turn, double run_out) {
    double heading = rng_.uniform(-kPi, kPi);
    Vec2 p{rng_.uniform(-50.0, 50.0), rng_.uniform(-50.0, 50.0)};
    std::vector<Waypoint> pts{p};
    p = p + lead_in * Vec2{std::cos(heading), std::sin(heading)};
    pts.push_back(p);
    const double arc = radius * std::abs(turn);
    const int n = std::max(2, static_cast<int>(std::ceil(arc / 2.0)));
    const double dtheta = turn / n;
    const double chord = 2.0 * radius * std::sin(std::abs(dtheta) / 2.0);
    for (int i = 0; i < n; ++i) {
      heading += dtheta / 2.0;
      p = p + chord * Vec2{std::cos(heading), std::sin(heading)};
      heading += dtheta / 2.0;
      pts.push_back(p);
    }
    p = p + run_out * Vec2{std::cos(heading), std::sin(heading)};
    pts.push_back(p);
    set_route(std::move(pts));
  }

  void set_route(std::vector<Waypoint> pts) {
    auto route = std::make_shared<const Route>(std::move(pts));
    world_.route_length = route->length();
    world_.route = std::move(route);
    const Route& r = *world_.route;
    world_.ego.position = r.point_at(0.0);
    world_.ego.heading = r.heading_at(0.0);
    world_.ego.speed = rng_.uniform(0.0, cfg_.physics.cruise_speed);
  }

  const Route& route() const { return *world_.route; }

  /// Adds the actor if its footprint clears the ego and every other actor.
  bool try_add(Actor a) {
    const Box box = actor_box(a);
    Box ego = ego_box(world_.ego, cfg_.physics);
    ego.half_length += 2.0;
    ego.half_width += 0.5;
    if (boxes_overlap(box, ego)) return false;
    for (const Actor& other : world_.actors) {
      if (boxes_overlap(box, actor_box(other))) return false;
    }
    a.id = next_id_++;
    world_.actors.push_back(a);
    return true;
  }

  Actor on_route(ActorKind kind, double s, double lateral) const {
    Actor a;
    a.kind = kind;
    a.position = route().offset_point(s, lateral);
    a.heading = route().heading_at(s);
    return a;
  }

  void add_sidewalk_pedestrians(int count, double s_lo, double s_hi) {
    for (int i = 0; i < count; ++i) {
      for (int attempt = 0; attempt < 20; ++attempt) {
        const double side = rng_.uniform() < 0.5 ? -1.0 : 1.0;
        Actor a = on_route(ActorKind::kPedestrian, rng_.uniform(s_lo, s_hi), side * rng_.uniform(3.0, 6.0));
        a.heading = normalize_angle(a.heading + rng_.uniform(-kPi, kPi));
        if (try_add(a)) break;
      }
    }
  }

  void add_lead(double s, ActorKind kind, double speed, bool pauses) {
    Actor a = on_route(kind, s, 0.0);
    a.behavior = Behavior::kCruise;
    a.speed = speed;
    a.script.cruise_speed = speed;
    a.script.follow_route = true;
    if (pauses) {
      a.script.pause_start = rng_.uniform(4.0, 20.0);
      a.script.pause_end = a.script.pause_start + rng_.uniform(3.0, 8.0);
    }
    try_add(a);
  }

  /// Crossing pedestrian or cyclist starting at `lateral` and walking to the
  /// opposite side. It starts moving when the ego is `margin` metres short of
  /// the point it would reach, at cruise speed, by the time the actor enters
  /// the lane.
  bool add_crossing(ActorKind kind, double s, double lateral, double speed, double margin) {
    const double time_to_lane = std::max(0.0, std::abs(lateral) - cfg_.physics.lane_half_width) / speed;
    const double trigger = time_to_lane * cfg_.physics.cruise_speed + margin;
    Actor a = on_route(kind, s, lateral);
    const double h = route().heading_at(s);
    a.heading = normalize_angle(lateral > 0 ? h - kPi / 2 : h + kPi / 2);
    a.behavior = Behavior::kCrossing;
    a.script.crossing_speed = speed;
    a.script.trigger_distance = trigger;
    a.script.stop_lateral = (lateral > 0 ? -1.0 : 1.0) * rng_.uniform(3.5, 5.0);
    return try_add(a);
  }

  void add_light(double s, double arrival_fraction) {
    TrafficLight light;
    light.id = next_id_++;
    light.stop_line = route().point_at(s);
    const PhysicsConfig& p = cfg_.physics;
    const double cycle = p.light_green + p.light_yellow + p.light_red;
    // Phase at expected ego arrival is arrival_fraction of the cycle.
    double t0 = std::fmod(arrival_fraction * cycle - s / p.cruise_speed, cycle);
    if (t0 < 0) t0 += cycle;
    light.phase = phase_at(t0, p);
    double start = 0.0;
    for (LightPhase ph = LightPhase::kGreen; ph != light.phase; ph = next_phase(ph))
      start += phase_duration(ph, p);
    light.phase_timer = t0 - start;
    world_.lights.push_back(light);
  }

  WorldState finish() { return std::move(world_); }

 private:
  const SimConfig& cfg_;
  Rng rng_;
  WorldState world_;
  int next_id_ = 1;
};

}  // namespace

WorldState spawn_scenario(ScenarioTemplate t, std::uint64_t seed, const SimConfig& cfg) {
  ScenarioBuilder b(t, seed, cfg);
  Rng& rng = b.rng();
  const auto side = [&rng] { return rng.uniform() < 0.5 ? -1.0 : 1.0; };
  switch (t) {
    case ScenarioTemplate::kClearRoad:
      b.straight_route(200.0);
      break;
    case ScenarioTemplate::kLeadVehicle: {
      b.straight_route(200.0);
      b.add_lead(rng.uniform(18.0, 45.0), ActorKind::kVehicle, rng.uniform(2.5, 4.5), rng.uniform() < 0.6);
      b.add_sidewalk_pedestrians(static_cast<int>(rng.index(3)), 15.0, 190.0);
      break;
    }
    case ScenarioTemplate::kRedLight: {
      b.straight_route(rng.uniform(150.0, 200.0));
      b.add_light(rng.uniform(50.0, 110.0), rng.uniform(0.35, 1.05));
      b.add_sidewalk_pedestrians(static_cast<int>(rng.index(3)), 15.0, 140.0);
      break;
    }
    case ScenarioTemplate::kCrossingPedestrian: {
      b.straight_route(150.0);
      const bool cyclist = rng.uniform() < 0.25;
      const double s = rng.uniform(50.0, 110.0);
      b.add_crossing(cyclist ? ActorKind::kCyclist : ActorKind::kPedestrian, s,
                     side() * rng.uniform(3.5, 5.0),
                     cyclist ? rng.uniform(2.5, 3.5) : rng.uniform(1.0, 1.6),
                     rng.uniform(9.0, 16.0));
      b.add_sidewalk_pedestrians(static_cast<int>(rng.index(2)), 15.0, 140.0);
      break;
    }
    case ScenarioTemplate::kOccludedPedestrian: {
      b.straight_route(150.0);
      const double sd = side();
      const double s = rng.uniform(50.0, 100.0);
      Actor parked = b.on_route(ActorKind::kVehicle, s, sd * 3.2);
      b.try_add(parked);
      b.add_crossing(ActorKind::kPedestrian, s + 2.9, sd * 3.0, rng.uniform(1.2, 1.8),
                     rng.uniform(9.0, 14.0));
      break;
    }
    case ScenarioTemplate::kMixed: {
      const double turn = side() * rng.uniform(kPi / 6, kPi / 3);
      b.curved_route(60.0, 40.0, turn, 80.0);
      const double len = b.route().length();
      b.add_light(rng.uniform(35.0, 55.0), rng.uniform(0.35, 1.05));
      if (rng.uniform() < 0.6) {
        b.add_lead(rng.uniform(18.0, 30.0), ActorKind::kVehicle, rng.uniform(3.0, 4.5), false);
      }
      b.add_crossing(ActorKind::kPedestrian, len - rng.uniform(30.0, 60.0), side() * rng.uniform(3.5, 5.0),
                     rng.uniform(1.0, 1.6), rng.uniform(9.0, 16.0));
      b.add_sidewalk_pedestrians(1 + static_cast<int>(rng.index(2)), 15.0, len - 10.0);
      break;
    }
  }
  return b.finish();
}

WorldState spawn_scenario(std::string_view name, std::uint64_t seed, const SimConfig& cfg) {
  return spawn_scenario(parse_template(name), seed, cfg);
}

int timeout_steps(const WorldState& world, const PhysicsConfig& cfg) {
  return static_cast<int>(std::ceil(world.route_length / cfg.timeout_speed / cfg.dt));
}

double ego_arc(const WorldState& world) { return world.route->project(world.ego.position).s; }

// ---------------------------------------------------------------------------
// Dynamics

namespace {

void advance_actor(Actor& a, const WorldState& world, double ego_s, double t, const PhysicsConfig& cfg) {
  const Route& route = *world.route;
  const double dt = cfg.dt;
  switch (a.behavior) {
    case Behavior::kStatic:
      a.speed = 0.0;
      break;
    case Behavior::kCruise: {
      const bool paused = t >= a.script.pause_start && t < a.script.pause_end;
      const double target = paused ? 0.0 : a.script.cruise_speed;
      const double dv = std::clamp(target - a.speed, -kActorAccel * dt, kActorAccel * dt);
      a.speed = std::max(0.0, a.speed + dv);
      if (a.script.follow_route) {
        const double s = route.project(a.position).s + a.speed * dt;
        a.position = route.offset_point(s, a.script.lateral_offset);
        a.heading = route.heading_at(s);
      } else {
        a.position = a.position + (a.speed * dt) * Vec2{std::cos(a.heading), std::sin(a.heading)};
      }
      break;
    }
    case Behavior::kCrossing: {
      if (!a.script.triggered) {
        const double actor_s = route.project(a.position).s;
        if (ego_s >= actor_s - a.script.trigger_distance) a.script.triggered = true;
      }
      if (a.script.triggered && !a.script.finished) {
        a.speed = a.script.crossing_speed;
        a.position = a.position + (a.speed * dt) * Vec2{std::cos(a.heading), std::sin(a.heading)};
        const double lat = route.project(a.position).lateral;
        const bool done = a.script.stop_lateral >= 0 ? lat >= a.script.stop_lateral : lat <= a.script.stop_lateral;
        if (done) {
          a.script.finished = true;
          a.speed = 0.0;
        }
      } else {
        a.speed = 0.0;
      }
      break;
    }
  }
}

}  // namespace

StepResult step(const WorldState& world, const Control& control, const SimConfig& cfg) {
  const PhysicsConfig& p = cfg.physics;
  StepResult out{world, {}};
  WorldState& w = out.world;
  const Route& route = *w.route;
  const double dt = p.dt;
  const double t = world.time_step * dt;

  const double half_len = 0.5 * p.ego_length;
  const double front_before = route.project(world.ego.position).s + half_len;

  // Ego: kinematic bicycle, explicit Euler on the pre-step speed.
  EgoState& ego = w.ego;
  const double steer = std::clamp(control.steer, -1.0, 1.0);
  const double throttle = control.brake ? 0.0 : std::clamp(control.throttle, 0.0, 1.0);
  ego.position = ego.position + (ego.speed * dt) * Vec2{std::cos(ego.heading), std::sin(ego.heading)};
  ego.heading = normalize_angle(ego.heading + ego.speed / p.wheelbase * std::tan(steer * p.max_steer_angle) * dt);
  const double accel = p.throttle_accel * throttle - (control.brake ? p.a_max : 0.0) - p.drag * ego.speed;
  ego.speed = std::clamp(ego.speed + accel * dt, 0.0, p.v_max);

  const RouteProjection ego_proj = route.project(ego.position);
  for (Actor& a : w.actors) advance_actor(a, w, ego_proj.s, t, p);

  for (TrafficLight& light : w.lights) {
    light.phase_timer += dt;
    const double dur = phase_duration(light.phase, p);
    if (light.phase_timer >= dur) {
      light.phase_timer -= dur;
      light.phase = next_phase(light.phase);
    }
  }
  w.time_step = world.time_step + 1;
  w.progress = std::max(world.progress, std::min(ego_proj.s, w.route_length));

  // Infractions.
  const double front_after = ego_proj.s + half_len;
  for (std::size_t i = 0; i < world.lights.size(); ++i) {
    const TrafficLight& before = world.lights[i];
    const double line_s = route.project(before.stop_line).s;
    if (before.phase == LightPhase::kRed && front_before < line_s && front_after >= line_s &&
        std::abs(ego_proj.lateral) < p.offroad_threshold) {
      out.events.push_back({InfractionKind::kRedLightViolation, w.time_step, before.id});
    }
  }
  const Box ebox = ego_box(ego, p);
  for (const Actor& a : w.actors) {
    if (!boxes_overlap(ebox, actor_box(a))) continue;
    const InfractionKind kind = a.kind == ActorKind::kPedestrian ? InfractionKind::kPedestrianCollision
                                                                 : InfractionKind::kVehicleCollision;
    out.events.push_back({kind, w.time_step, a.id});
  }
  const double lateral = std::abs(ego_proj.lateral);
  if (lateral > p.layout_threshold) {
    out.events.push_back({InfractionKind::kLayoutCollision, w.time_step, -1});
  }
  const bool off = lateral > p.offroad_threshold;
  if (off && !world.offroad) out.events.push_back({InfractionKind::kOffroad, w.time_step, -1});
  w.offroad = off;
  return out;
}

// ---------------------------------------------------------------------------
// Sensors

SensorObs render_sensors(const WorldState& world, const SensorConfig& cfg, Rng& rng) {
  SensorObs obs;
  const EgoState& ego = world.ego;
  obs.ego_speed = ego.speed;

  struct Candidate {
    double dist;
    int id;
    Detection det;
  };
  std::vector<Candidate> found;

  std::vector<Box> occluders;
  std::vector<int> occluder_ids;
  for (const Actor& a : world.actors) {
    if (a.kind == ActorKind::kVehicle && a.behavior == Behavior::kStatic) {
      occluders.push_back(actor_box(a));
      occluder_ids.push_back(a.id);
    }
  }

  for (const Actor& a : world.actors) {
    const double dist = (a.position - ego.position).norm();
    if (dist > cfg.detection_range) continue;
    bool hidden = false;
    for (std::size_t k = 0; k < occluders.size() && !hidden; ++k) {
      if (occluder_ids[k] != a.id && segment_hits_box(ego.position, a.position, occluders[k])) hidden = true;
    }
    if (hidden) continue;
    Vec2 rel = to_local(a.position, ego.position, ego.heading);
    rel.x += rng.normal(0.0, cfg.noise_sigma);
    rel.y += rng.normal(0.0, cfg.noise_sigma);
    Detection d{rel.x, rel.y, normalize_angle(a.heading - ego.heading), a.speed,
                static_cast<SensedKind>(static_cast<int>(a.kind))};
    found.push_back({rel.norm(), a.id, d});
  }

  const double cone = cfg.light_cone_deg * std::numbers::pi / 180.0;
  double nearest_light = std::numeric_limits<double>::infinity();
  for (const TrafficLight& light : world.lights) {
    Vec2 rel = to_local(light.stop_line, ego.position, ego.heading);
    const double dist = rel.norm();
    if (rel.x <= 0.0 || dist > cfg.light_visibility || std::abs(std::atan2(rel.y, rel.x)) > cone) continue;
    if (dist < nearest_light) {
      nearest_light = dist;
      obs.visible_light_phase = static_cast<VisiblePhase>(static_cast<int>(light.phase));
    }
    rel.x += rng.normal(0.0, cfg.noise_sigma);
    rel.y += rng.normal(0.0, cfg.noise_sigma);
    found.push_back({rel.norm(), light.id, Detection{rel.x, rel.y, 0.0, 0.0, SensedKind::kLight}});
  }

  std::sort(found.begin(), found.end(), [](const Candidate& a, const Candidate& b) {
    return a.dist != b.dist ? a.dist < b.dist : a.id < b.id;
  });
  obs.detections.assign(static_cast<std::size_t>(cfg.n_detections), Detection{});
  for (std::size_t i = 0; i < found.size() && i < obs.detections.size(); ++i) obs.detections[i] = found[i].det;

  const Route& route = *world.route;
  const double s0 = route.project(ego.position).s;
  obs.route_context.reserve(static_cast<std::size_t>(cfg.route_context));
  for (int k = 1; k <= cfg.route_context; ++k) {
    obs.route_context.push_back(
        to_local(route.point_at(s0 + k * cfg.route_context_spacing), ego.position, ego.heading));
  }
  return obs;
}

}  // namespace cfdrive
