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

#include <filesystem>
#include <fstream>
#include <set>

#include "cfdrive/augment.hpp"
#include "cfdrive/expert.hpp"
#include "fixtures.hpp"

using namespace cfdrive;
using namespace cfdrive::testing;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("cfdrive_unit_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

CFExample fake_cf(const WorldState& w, ActionClass target) {
  CFExample cf;
  cf.original = filter_observation(w);
  cf.cf = cf.original;
  cf.original_class = ActionClass::kGo;
  cf.target_class = target;
  cf.valid = true;
  return cf;
}

DemoRecord source_record(const WorldState& w, const SimConfig& sim) {
  Rng rng(1);
  return make_record(w, expert_act(w, sim), sim, rng);
}

std::vector<DemoRecord> small_demos(const SimConfig& sim) {
  const std::vector<EpisodeSpec> eps{{ScenarioTemplate::kRedLight, 3}, {ScenarioTemplate::kLeadVehicle, 4}};
  return collect_demonstrations(eps, 120, sim);
}

}  // namespace

TEST_CASE("one clear_road episode of 100 steps gives 100 original records") {
  const SimConfig sim;
  const std::vector<EpisodeSpec> eps{{ScenarioTemplate::kClearRoad, 1}};
  const auto recs = collect_demonstrations(eps, 100, sim);
  CHECK(recs.size() == 100);
  for (const auto& r : recs) {
    CHECK_FALSE(r.is_cf);
    CHECK_FALSE(r.cf_meta.has_value());
  }
}

TEST_CASE("collection is deterministic for a fixed mix and seed") {
  const SimConfig sim;
  const auto mix = TemplateMix::uniform(kAllTemplates);
  const auto a = collect_demonstrations(mix, 4, 17, 150, sim);
  const auto b = collect_demonstrations(mix, 4, 17, 150, sim, 2);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(to_json(a[i]).dump() == to_json(b[i]).dump());
}

TEST_CASE("red_light episodes hold STOP records unless the light is green on arrival") {
  const SimConfig sim;
  int with_stop = 0;
  const int n = 20;
  for (std::uint64_t seed = 0; seed < n; ++seed) {
    const std::vector<EpisodeSpec> eps{{ScenarioTemplate::kRedLight, seed}};
    const auto recs = collect_demonstrations(eps, 2000, sim);
    int stops = 0;
    for (const auto& r : recs) stops += r.action_class == ActionClass::kStop;
    with_stop += stops > 0;
    if (seed == 7) CHECK(stops >= 1);
  }
  CHECK(with_stop >= n * 7 / 10);
}

TEST_CASE("episode planning follows the mix weights") {
  TemplateMix mix{{ScenarioTemplate::kClearRoad, ScenarioTemplate::kRedLight}, {3.0, 1.0}};
  const auto plan = plan_episodes(mix, 8, 5);
  int clear = 0;
  for (const auto& e : plan) clear += e.scenario == ScenarioTemplate::kClearRoad;
  CHECK(clear == 6);
  CHECK_THROWS_AS(plan_episodes(TemplateMix{}, 3, 1), Error);
}

TEST_CASE("realizing the unchanged observation returns the same world") {
  const SimConfig sim;
  for (ScenarioTemplate t : kAllTemplates) {
    const WorldState w = spawn_scenario(t, 8, sim);
    CHECK(realize_scene(w, filter_observation(w), sim) == w);
  }
}

TEST_CASE("moving the lead vehicle changes only its position") {
  const SimConfig sim;
  WorldState w = straight_world(4.0);
  w.actors.push_back(make_actor(1, ActorKind::kVehicle, {14.0, 0.0}));
  w.actors.push_back(make_actor(2, ActorKind::kPedestrian, {30.0, 5.0}));
  FilteredObs o = filter_observation(w);
  REQUIRE(o.source_ids[0] == 1);
  o.at(0, SlotField::kRelX) = 9.99;
  const WorldState out = realize_scene(w, o, sim);
  WorldState expected = w;
  expected.actors[0].position = {9.99, 0.0};
  CHECK(out == expected);
  CHECK(filter_observation(out).features == o.features);
}

TEST_CASE("a pedestrian inside the ego footprint is implausible") {
  const SimConfig sim;
  WorldState w = straight_world(4.0);
  w.actors.push_back(make_actor(1, ActorKind::kPedestrian, {12.0, 3.0}));
  FilteredObs o = filter_observation(w);
  o.at(0, SlotField::kRelX) = 0.5;
  o.at(0, SlotField::kRelY) = 0.0;
  try {
    realize_scene(w, o, sim);
    FAIL("expected Implausible");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kImplausible);
  }
}

TEST_CASE("turning a green light red within braking distance relabels STOP") {
  const SimConfig sim;
  WorldState w = straight_world(6.0);
  w.lights.push_back(make_light(1, {0.5 * sim.physics.ego_length + 7.0, 0.0}, LightPhase::kGreen));
  const DemoRecord src = source_record(w, sim);
  REQUIRE(src.action_class == ActionClass::kGo);
  FilteredObs o = filter_observation(w);
  o.at(0, SlotField::kPhase) = static_cast<double>(PhaseCode::kRed);
  const WorldState wp = realize_scene(w, o, sim);
  Rng rng(2);
  CFExample cf = fake_cf(w, ActionClass::kStop);
  cf.cf = o;
  const DemoRecord r = relabel_and_record(wp, src, cf, sim, rng);
  CHECK(r.is_cf);
  CHECK(r.action_class == ActionClass::kStop);
  REQUIRE(r.cf_meta.has_value());
  CHECK(r.cf_meta->expert_agreed);
}

TEST_CASE("moving a stopped cyclist closer flips the expert from go to stop") {
  const SimConfig sim;
  WorldState w = straight_world(6.0);
  w.actors.push_back(make_actor(1, ActorKind::kCyclist, {30.0, 0.0}));
  const DemoRecord src = source_record(w, sim);
  REQUIRE(src.action_class == ActionClass::kGo);
  FilteredObs o = filter_observation(w);
  o.at(0, SlotField::kRelX) = 9.0;
  const WorldState wp = realize_scene(w, o, sim);
  Rng rng(3);
  const DemoRecord r = relabel_and_record(wp, src, fake_cf(w, ActionClass::kStop), sim, rng);
  CHECK(r.action_class == ActionClass::kStop);
  CHECK(r.cf_meta->expert_agreed);
}

TEST_CASE("the expert label wins when it disagrees with the classifier") {
  const SimConfig sim;
  WorldState w = straight_world(6.0);
  w.actors.push_back(make_actor(1, ActorKind::kVehicle, {40.0, 0.0}));
  const DemoRecord src = source_record(w, sim);
  Rng rng(4);
  const DemoRecord r = relabel_and_record(w, src, fake_cf(w, ActionClass::kStop), sim, rng);
  CHECK(r.action_class == ActionClass::kGo);
  CHECK_FALSE(r.cf_meta->expert_agreed);
  CHECK(r.cf_meta->target_class == ActionClass::kStop);
}

TEST_CASE("target fraction 0 returns the demos unchanged") {
  const SimConfig sim;
  const auto demos = small_demos(sim);
  const AugmentedDataset ds = build_dataset(demos, demos, 0.0, 1);
  CHECK(ds.n_original == static_cast<int>(demos.size()));
  CHECK(ds.n_cf == 0);
  CHECK(ds.records == demos);
}

TEST_CASE("required CF count hits the target fraction") {
  for (int n : {1000, 5000, 20000}) {
    const int k = required_cf_count(n, 0.122);
    const double frac = static_cast<double>(k) / (k + n);
    CHECK(frac >= 0.102);
    CHECK(frac <= 0.142);
  }
  CHECK_THROWS_AS(required_cf_count(10, 0.9), Error);
}

TEST_CASE("augmentation adds CF records that never duplicate an original") {
  const SimConfig sim;
  const auto demos = small_demos(sim);
  const TreeModel tree = fit(labeled_observations(demos), TreeHyper{30, 3, 0.1, 5, 1.0});
  AugmentConfig cfg;
  cfg.target_cf_fraction = 0.1;
  cfg.seed = 9;
  const AugmentResult res = augment(demos, tree, cfg, 120, sim);
  CHECK(res.dataset.n_original == static_cast<int>(demos.size()));
  CHECK(res.dataset.n_cf + res.dataset.cf_shortfall == required_cf_count(res.dataset.n_original, 0.1));
  CHECK(res.dataset.n_cf > 0);
  for (const auto& r : res.dataset.records) {
    if (!r.is_cf) continue;
    REQUIRE(r.cf_meta.has_value());
    for (const auto& d : demos) CHECK_FALSE(r == d);
  }
}

TEST_CASE("aux targets flag a stop and a red light ahead") {
  const SimConfig sim;
  WorldState w = straight_world(6.0);
  w.lights.push_back(make_light(1, {0.5 * sim.physics.ego_length + 7.0, 0.0}, LightPhase::kRed));
  const AuxTargets aux = aux_targets(w, expert_act(w, sim), sim);
  CHECK(aux.flags[static_cast<int>(TrafficFlag::kStopRequired)] == 1.0);
  CHECK(aux.flags[static_cast<int>(TrafficFlag::kRedLightAhead)] == 1.0);
  for (double g : aux.grid) CHECK((g == 0.0 || g == 1.0));
}

TEST_CASE("datasets round-trip through JSON lines") {
  const SimConfig sim;
  const auto dir = scratch_dir("roundtrip");
  AugmentedDataset ds;
  ds.records = small_demos(sim);
  ds.recount();
  const std::string path = (dir / "d.jsonl").string();
  write_dataset(path, ds);
  CHECK(std::filesystem::exists(schema_path_for(path)));
  const AugmentedDataset back = read_dataset(path);
  CHECK(back.records == ds.records);
  CHECK(back.n_original == ds.n_original);
}

TEST_CASE("a corrupted line is reported by number") {
  const SimConfig sim;
  const auto dir = scratch_dir("corrupt");
  AugmentedDataset ds;
  ds.records = small_demos(sim);
  ds.records.resize(5);
  ds.recount();
  const std::string path = (dir / "d.jsonl").string();
  write_dataset(path, ds);
  std::vector<std::string> lines;
  {
    std::ifstream in(path);
    for (std::string l; std::getline(in, l);) lines.push_back(l);
  }
  lines[2] = "{\"not\": \"a record\"";
  {
    std::ofstream out(path, std::ios::trunc);
    for (const auto& l : lines) out << l << '\n';
  }
  try {
    read_dataset(path);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParse);
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }
}
