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

#include <json.hpp>

#include "cfdrive/action.hpp"
#include "cfdrive/observation.hpp"
#include "cfdrive/world.hpp"

namespace cfdrive {

using Json = nlohmann::json;

void to_json(Json& j, const Vec2& v);
void from_json(const Json& j, Vec2& v);
void to_json(Json& j, const EgoState& e);
void to_json(Json& j, const Actor& a);
void to_json(Json& j, const TrafficLight& l);
void to_json(Json& j, const Control& c);
void to_json(Json& j, const InfractionEvent& e);
void from_json(const Json& j, InfractionEvent& e);
void to_json(Json& j, const SensorObs& s);
void from_json(const Json& j, SensorObs& s);
void to_json(Json& j, const Action& a);
void from_json(const Json& j, Action& a);

std::string_view light_phase_name(LightPhase p);
std::string_view visible_phase_name(VisiblePhase p);
VisiblePhase parse_visible_phase(std::string_view s);

/// One line of an episode trace.
Json trace_line(const WorldState& world, const Control& control, const std::vector<InfractionEvent>& events);

}  // namespace cfdrive
