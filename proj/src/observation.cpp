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

#include "cfdrive/observation.hpp"

#include <algorithm>

namespace cfdrive {

PhaseCode phase_code(LightPhase p) {
  switch (p) {
    case LightPhase::kGreen: return PhaseCode::kGreen;
    case LightPhase::kYellow: return PhaseCode::kYellow;
    case LightPhase::kRed: return PhaseCode::kRed;
  }
  return PhaseCode::kNotApplicable;
}

LightPhase phase_from_code(PhaseCode c) {
  switch (c) {
    case PhaseCode::kYellow: return LightPhase::kYellow;
    case PhaseCode::kRed: return LightPhase::kRed;
    default: return LightPhase::kGreen;
  }
}

FilteredObs FilteredObs::from_features(std::span<const double> f) {
  if (f.size() != kFeatureCount) throw Error(ErrorCode::kShapeMismatch, "filtered observation needs 25 features");
  FilteredObs o;
  std::copy(f.begin(), f.end(), o.features.begin());
  return o;
}

void set_sentinel(FilteredObs& o, int slot) {
  o.at(slot, SlotField::kRelX) = kSentinelX;
  o.at(slot, SlotField::kRelY) = 0.0;
  o.at(slot, SlotField::kRelHeading) = 0.0;
  o.at(slot, SlotField::kSpeed) = 0.0;
  o.at(slot, SlotField::kKind) = static_cast<double>(KindCode::kNone);
  o.at(slot, SlotField::kPhase) = static_cast<double>(PhaseCode::kNotApplicable);
  o.source_ids[static_cast<std::size_t>(slot)] = -1;
}

FilteredObs filter_observation(const WorldState& world) {
  struct Candidate {
    double dist;
    int id;
    Vec2 rel;
    double rel_heading;
    double speed;
    KindCode kind;
    PhaseCode phase;
  };
  const EgoState& ego = world.ego;
  std::vector<Candidate> cands;
  cands.reserve(world.actors.size() + world.lights.size());
  for (const Actor& a : world.actors) {
    const Vec2 rel = to_local(a.position, ego.position, ego.heading);
    cands.push_back({(a.position - ego.position).norm(), a.id, rel, normalize_angle(a.heading - ego.heading),
                     a.speed, static_cast<KindCode>(static_cast<int>(a.kind)), PhaseCode::kNotApplicable});
  }
  for (const TrafficLight& l : world.lights) {
    const Vec2 rel = to_local(l.stop_line, ego.position, ego.heading);
    cands.push_back({(l.stop_line - ego.position).norm(), l.id, rel, 0.0, 0.0, KindCode::kTrafficLight,
                     phase_code(l.phase)});
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    return a.dist != b.dist ? a.dist < b.dist : a.id < b.id;
  });

  FilteredObs o;
  o.features[kEgoSpeedIndex] = ego.speed;
  for (int i = 0; i < kSlots; ++i) {
    if (static_cast<std::size_t>(i) >= cands.size()) {
      set_sentinel(o, i);
      continue;
    }
    const Candidate& c = cands[static_cast<std::size_t>(i)];
    o.at(i, SlotField::kRelX) = c.rel.x;
    o.at(i, SlotField::kRelY) = c.rel.y;
    o.at(i, SlotField::kRelHeading) = c.rel_heading;
    o.at(i, SlotField::kSpeed) = c.speed;
    o.at(i, SlotField::kKind) = static_cast<double>(c.kind);
    o.at(i, SlotField::kPhase) = static_cast<double>(c.phase);
    o.source_ids[static_cast<std::size_t>(i)] = c.id;
  }
  return o;
}

ActionClass discretize_action(const Action& action, const SimConfig& cfg) {
  if (action.brake) return ActionClass::kStop;
  const double v = action.target_speed(cfg.physics.dt);
  return v >= cfg.expert.go_fraction * cfg.physics.cruise_speed ? ActionClass::kGo : ActionClass::kSlow;
}

const std::vector<FeatureInfo>& feature_schema() {
  static const std::vector<FeatureInfo> schema = [] {
    std::vector<FeatureInfo> s;
    s.push_back({"ego_speed", kEgoSpeedIndex, "m/s", true, false});
    for (int i = 0; i < kSlots; ++i) {
      const std::string p = "slot" + std::to_string(i) + ".";
      s.push_back({p + "rel_x", feature_index(i, SlotField::kRelX), "m", false, false});
      s.push_back({p + "rel_y", feature_index(i, SlotField::kRelY), "m", false, false});
      s.push_back({p + "rel_heading", feature_index(i, SlotField::kRelHeading), "rad", false, false});
      s.push_back({p + "speed", feature_index(i, SlotField::kSpeed), "m/s", false, false});
      s.push_back({p + "kind_code", feature_index(i, SlotField::kKind), "code", true, true});
      s.push_back({p + "light_phase_code", feature_index(i, SlotField::kPhase), "code", false, true});
    }
    return s;
  }();
  return schema;
}

}  // namespace cfdrive
