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

#include "cfdrive/json_io.hpp"

namespace cfdrive {

void to_json(Json& j, const Vec2& v) { j = Json::array({v.x, v.y}); }
void from_json(const Json& j, Vec2& v) {
  v.x = j.at(0).get<double>();
  v.y = j.at(1).get<double>();
}

void to_json(Json& j, const EgoState& e) {
  j = Json{{"x", e.position.x}, {"y", e.position.y}, {"heading", e.heading}, {"speed", e.speed}};
}

void to_json(Json& j, const Actor& a) {
  static constexpr const char* kKinds[] = {"", "VEHICLE", "PEDESTRIAN", "CYCLIST"};
  static constexpr const char* kBehaviors[] = {"STATIC", "CRUISE", "CROSSING"};
  j = Json{{"id", a.id},
           {"kind", kKinds[static_cast<int>(a.kind)]},
           {"x", a.position.x},
           {"y", a.position.y},
           {"heading", a.heading},
           {"speed", a.speed},
           {"behavior", kBehaviors[static_cast<int>(a.behavior)]}};
}

std::string_view light_phase_name(LightPhase p) {
  switch (p) {
    case LightPhase::kRed: return "RED";
    case LightPhase::kYellow: return "YELLOW";
    case LightPhase::kGreen: return "GREEN";
  }
  return "GREEN";
}

std::string_view visible_phase_name(VisiblePhase p) {
  switch (p) {
    case VisiblePhase::kRed: return "RED";
    case VisiblePhase::kYellow: return "YELLOW";
    case VisiblePhase::kGreen: return "GREEN";
    case VisiblePhase::kUnknown: return "UNKNOWN";
  }
  return "UNKNOWN";
}

VisiblePhase parse_visible_phase(std::string_view s) {
  if (s == "RED") return VisiblePhase::kRed;
  if (s == "YELLOW") return VisiblePhase::kYellow;
  if (s == "GREEN") return VisiblePhase::kGreen;
  if (s == "UNKNOWN") return VisiblePhase::kUnknown;
  throw Error(ErrorCode::kParse, "unknown light phase '" + std::string(s) + "'");
}

void to_json(Json& j, const TrafficLight& l) {
  j = Json{{"id", l.id},
           {"x", l.stop_line.x},
           {"y", l.stop_line.y},
           {"phase", light_phase_name(l.phase)},
           {"phase_timer", l.phase_timer}};
}

void to_json(Json& j, const Control& c) {
  j = Json{{"steer", c.steer}, {"throttle", c.throttle}, {"brake", c.brake}};
}

void to_json(Json& j, const InfractionEvent& e) {
  j = Json{{"kind", infraction_name(e.kind)}, {"time_step", e.time_step}, {"actor_id", e.actor_id}};
}

void from_json(const Json& j, InfractionEvent& e) {
  const auto name = j.at("kind").get<std::string>();
  bool found = false;
  for (int k = 0; k < kInfractionKinds; ++k) {
    if (infraction_name(static_cast<InfractionKind>(k)) == name) {
      e.kind = static_cast<InfractionKind>(k);
      found = true;
    }
  }
  if (!found) throw Error(ErrorCode::kParse, "unknown infraction kind '" + name + "'");
  e.time_step = j.at("time_step").get<int>();
  e.actor_id = j.at("actor_id").get<int>();
}

void to_json(Json& j, const SensorObs& s) {
  Json dets = Json::array();
  for (const Detection& d : s.detections) {
    dets.push_back(Json::array({d.rel_x, d.rel_y, d.rel_heading, d.speed, static_cast<int>(d.kind)}));
  }
  j = Json{{"ego_speed", s.ego_speed},
           {"detections", std::move(dets)},
           {"light", visible_phase_name(s.visible_light_phase)},
           {"route", s.route_context}};
}

void from_json(const Json& j, SensorObs& s) {
  s.ego_speed = j.at("ego_speed").get<double>();
  s.detections.clear();
  for (const Json& d : j.at("detections")) {
    const int kind = d.at(4).get<int>();
    if (kind < 0 || kind > 4) throw Error(ErrorCode::kParse, "detection kind out of range");
    s.detections.push_back({d.at(0).get<double>(), d.at(1).get<double>(), d.at(2).get<double>(),
                            d.at(3).get<double>(), static_cast<SensedKind>(kind)});
  }
  s.visible_light_phase = parse_visible_phase(j.at("light").get<std::string>());
  s.route_context = j.at("route").get<std::vector<Vec2>>();
}

void to_json(Json& j, const Action& a) {
  j = Json{{"waypoints", a.waypoints},
           {"accel", a.accel},
           {"brake", a.brake},
           {"class", static_cast<int>(a.class_hint)},
           {"rule", a.rule}};
}

void from_json(const Json& j, Action& a) {
  const auto& wps = j.at("waypoints");
  if (wps.size() != kHorizon) throw Error(ErrorCode::kParse, "action needs exactly 10 waypoints");
  for (int k = 0; k < kHorizon; ++k) a.waypoints[k] = wps.at(k).get<Vec2>();
  a.accel = j.at("accel").get<double>();
  a.brake = j.at("brake").get<int>();
  const int c = j.at("class").get<int>();
  if (c < 0 || c >= kNumClasses) throw Error(ErrorCode::kParse, "action class out of range");
  a.class_hint = static_cast<ActionClass>(c);
  a.rule = j.value("rule", 0);
}

Json trace_line(const WorldState& world, const Control& control, const std::vector<InfractionEvent>& events) {
  return Json{{"time_step", world.time_step}, {"ego", world.ego},       {"actors", world.actors},
              {"lights", world.lights},       {"control", control},     {"events", events}};
}

}  // namespace cfdrive
