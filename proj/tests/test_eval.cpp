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

#include <sstream>

#include "cfdrive/eval.hpp"
#include "fixtures.hpp"

using namespace cfdrive;

namespace {

EpisodeResult route(double completion, std::vector<InfractionKind> kinds) {
  EpisodeResult r;
  r.route_completion = completion;
  for (InfractionKind k : kinds) r.infractions.push_back({k, 0, -1});
  return r;
}

}  // namespace

TEST_CASE("expert completes clear_road with no infractions") {
  const SimConfig sim;
  ExpertPolicy expert(sim);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const EpisodeResult r = run_episode(expert, ScenarioTemplate::kClearRoad, seed, 2000, sim);
    CHECK(r.route_completion == 100.0);
    CHECK(r.infractions.empty());
  }
}

TEST_CASE("an always-braking policy times out near zero completion") {
  const SimConfig sim;
  BrakePolicy brake;
  const EpisodeResult r = run_episode(brake, ScenarioTemplate::kClearRoad, 1, 2000, sim);
  CHECK(r.route_completion < 1.0);
  REQUIRE(r.infractions.size() == 1);
  CHECK(r.infractions[0].kind == InfractionKind::kRouteTimeout);
  CHECK(infraction_score(r) == doctest::Approx(0.70).epsilon(1e-12));
}

TEST_CASE("episodes are deterministic and traces are reproducible") {
  const SimConfig sim;
  ExpertPolicy a(sim), b(sim);
  std::ostringstream ta, tb;
  const EpisodeResult ra = run_episode(a, ScenarioTemplate::kMixed, 5, 2000, sim, TraceSink{&ta});
  const EpisodeResult rb = run_episode(b, ScenarioTemplate::kMixed, 5, 2000, sim, TraceSink{&tb});
  CHECK(ra == rb);
  CHECK(ta.str() == tb.str());
  CHECK_FALSE(ta.str().empty());
}

TEST_CASE("infraction score is the product of coefficients") {
  CHECK(infraction_score(route(100.0, {})) == 1.0);
  CHECK(std::abs(infraction_score(route(100.0, {InfractionKind::kRedLightViolation})) - 0.70) < 1e-12);
  CHECK(std::abs(infraction_score(route(100.0, {InfractionKind::kVehicleCollision, InfractionKind::kVehicleCollision})) -
                 0.36) < 1e-12);
  CHECK(std::abs(infraction_score(route(50.0, {InfractionKind::kRouteTimeout, InfractionKind::kRouteTimeout})) - 0.70) <
        1e-12);
}

TEST_CASE("driving score formulas") {
  const std::vector<EpisodeResult> one{route(100.0, {})};
  CHECK(std::abs(driving_score(one).driving_score - 100.0) < 1e-12);

  const std::vector<EpisodeResult> red{route(80.0, {InfractionKind::kRedLightViolation})};
  CHECK(std::abs(driving_score(red).driving_score - 56.0) < 1e-12);

  EpisodeResult half = route(50.0, {});
  // Infraction score 0.5: one pedestrian collision.
  half.infractions.push_back({InfractionKind::kPedestrianCollision, 0, -1});
  const std::vector<EpisodeResult> two{route(100.0, {}), half};
  const EvalReport rep = driving_score(two);
  CHECK(std::abs(rep.driving_score - 62.5) < 1e-12);
  CHECK(rep.route_completion_mean == doctest::Approx(75.0));
  CHECK(rep.infraction_score_mean == doctest::Approx(0.75));
  CHECK(rep.infraction_rates[static_cast<int>(InfractionKind::kPedestrianCollision)] == doctest::Approx(0.5));

  CHECK_THROWS_AS(driving_score(std::span<const EpisodeResult>{}), Error);
}

TEST_CASE("suite results are independent of the worker count") {
  const SimConfig sim;
  std::vector<EvalCase> cases;
  for (ScenarioTemplate t : kAllTemplates) cases.push_back({t, derive_seed(3, static_cast<std::uint64_t>(t))});
  const auto make = [&sim] { return std::make_unique<ExpertPolicy>(sim); };
  const auto serial = run_suite(make, cases, 2000, sim, 1);
  const auto parallel = run_suite(make, cases, 2000, sim, 3);
  CHECK(serial == parallel);
}

TEST_CASE("report rows carry the method name and score") {
  const std::vector<EpisodeResult> one{route(100.0, {})};
  const EvalReport rep = driving_score(one);
  const std::string row = table_csv_row("expert", rep);
  CHECK(row.rfind("expert,", 0) == 0);
  CHECK(table_csv_header().find("driving_score") != std::string::npos);
  const Json j = Json::parse(report_to_json(rep, "expert"));
  CHECK(j.at("driving_score").get<double>() == 100.0);
}
