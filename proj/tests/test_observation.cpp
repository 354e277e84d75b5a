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

#include <doctest.h>

#include <algorithm>

#include "cfdrive/observation.hpp"
#include "fixtures.hpp"

using namespace cfdrive;
using cfdrive::testing::make_actor;
using cfdrive::testing::make_light;
using cfdrive::testing::straight_world;

TEST_CASE("the four nearest entities fill the slots in distance order") {
  WorldState w = straight_world();
  int id = 10;
  for (double d : {20.0, 3.0, 15.0, 8.0}) w.actors.push_back(make_actor(id++, ActorKind::kVehicle, {d, 0.0}));
  w.lights.push_back(make_light(1, {12.0, 0.0}, LightPhase::kRed));
  const FilteredObs o = filter_observation(w);
  const double expected[] = {3.0, 8.0, 12.0, 15.0};
  for (int s = 0; s < kSlots; ++s) CHECK(o.at(s, SlotField::kRelX) == doctest::Approx(expected[s]));
  CHECK(o.kind(2) == KindCode::kTrafficLight);
  CHECK(static_cast<PhaseCode>(static_cast<int>(o.at(2, SlotField::kPhase))) == PhaseCode::kRed);
  CHECK(o.source_ids[2] == 1);
}

TEST_CASE("a single vehicle leaves three sentinel slots") {
  WorldState w = straight_world(3.0);
  w.actors.push_back(make_actor(1, ActorKind::kVehicle, {10.0, 1.0}));
  const FilteredObs o = filter_observation(w);
  CHECK(o.ego_speed() == 3.0);
  CHECK_FALSE(o.is_sentinel(0));
  for (int s = 1; s < kSlots; ++s) {
    CHECK(o.is_sentinel(s));
    CHECK(o.at(s, SlotField::kRelX) == kSentinelX);
    CHECK(o.source_ids[static_cast<std::size_t>(s)] == -1);
  }
}

TEST_CASE("equal distances rank the lower id first") {
  WorldState w = straight_world();
  w.actors.push_back(make_actor(5, ActorKind::kVehicle, {0.0, 10.0}));
  w.actors.push_back(make_actor(2, ActorKind::kPedestrian, {10.0, 0.0}));
  const FilteredObs o = filter_observation(w);
  CHECK(o.source_ids[0] == 2);
  CHECK(o.source_ids[1] == 5);
  CHECK(o.kind(0) == KindCode::kPedestrian);
}

TEST_CASE("discretize: brake is STOP") {
  SimConfig sim;
  Action a;
  for (int k = 0; k < kHorizon; ++k) a.waypoints[k] = {0.6 * (k + 1), 0.0};
  a.brake = 1;
  CHECK(discretize_action(a, sim) == ActionClass::kStop);
}

TEST_CASE("discretize: cruise speed is GO and half cruise is SLOW") {
  SimConfig sim;
  const double step = sim.physics.cruise_speed * sim.physics.dt;
  Action go, slow;
  for (int k = 0; k < kHorizon; ++k) {
    go.waypoints[k] = {step * (k + 1), 0.0};
    slow.waypoints[k] = {0.5 * step * (k + 1), 0.0};
  }
  CHECK(discretize_action(go, sim) == ActionClass::kGo);
  CHECK(discretize_action(slow, sim) == ActionClass::kSlow);
}

TEST_CASE("feature schema covers all 25 features in index order") {
  const auto& schema = feature_schema();
  REQUIRE(schema.size() == static_cast<std::size_t>(kFeatureCount));
  for (int i = 0; i < kFeatureCount; ++i) CHECK(schema[static_cast<std::size_t>(i)].index == i);
  CHECK(schema[0].frozen);
  CHECK(std::count_if(schema.begin(), schema.end(), [](const FeatureInfo& f) { return f.integer; }) == 2 * kSlots);
}

TEST_CASE("from_features rejects the wrong width") {
  std::vector<double> f(kFeatureCount - 1, 0.0);
  CHECK_THROWS_AS(FilteredObs::from_features(f), Error);
}
