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

#include "cfdrive/learner.hpp"
#include "fixtures.hpp"

using namespace cfdrive;

namespace {

std::vector<DemoRecord> tiny_records(int n) {
  const SimConfig sim;
  const std::vector<EpisodeSpec> eps{{ScenarioTemplate::kRedLight, 7}, {ScenarioTemplate::kLeadVehicle, 2}};
  auto all = collect_demonstrations(eps, 200, sim);
  std::vector<DemoRecord> out;
  for (std::size_t i = 0; i < all.size() && static_cast<int>(out.size()) < n; i += all.size() / static_cast<std::size_t>(n))
    out.push_back(all[i]);
  return out;
}

Targets perfect_targets(int batch) {
  Rng r(3);
  Targets t{Eigen::MatrixXd(kWaypointOutputs, batch), Eigen::MatrixXd(kGridValues, batch),
            Eigen::MatrixXd(kFlagCount, batch)};
  for (int c = 0; c < batch; ++c) {
    for (int i = 0; i < kWaypointOutputs; ++i) t.waypoints(i, c) = r.uniform(-5.0, 5.0);
    for (int i = 0; i < kGridValues; ++i) t.grid(i, c) = r.uniform() < 0.3 ? 1.0 : 0.0;
    for (int i = 0; i < kFlagCount; ++i) t.flags(i, c) = r.uniform() < 0.5 ? 1.0 : 0.0;
  }
  return t;
}

Predictions as_prediction(const Targets& t) { return Predictions{t.waypoints, t.grid, t.flags}; }

}  // namespace

TEST_CASE("loss of a perfect prediction is at the clamp floor") {
  const Targets t = perfect_targets(4);
  const LossTerms l = loss(as_prediction(t), t, TrainConfig{});
  CHECK(std::abs(l.l_pt) < 1e-12);
  CHECK(std::abs(l.l_map) < 1e-12);
  CHECK(l.l_tf <= 1e-6);
}

TEST_CASE("waypoints off by 1 m give l_pt = 1 and total 0.4 plus the clamp term") {
  const Targets t = perfect_targets(3);
  Predictions p = as_prediction(t);
  p.waypoints.array() += 1.0;
  const TrainConfig cfg;
  const LossTerms l = loss(p, t, cfg);
  CHECK(l.l_pt == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(l.total - (0.4 + cfg.lambda_tf * l.l_tf)) < 1e-12);
  CHECK(l.l_tf <= 1e-6);
}

TEST_CASE("zero weights give zero total loss") {
  TrainConfig cfg;
  cfg.lambda_pt = cfg.lambda_map = cfg.lambda_tf = 0.0;
  const Targets t = perfect_targets(2);
  Predictions p = as_prediction(t);
  p.waypoints.array() += 3.0;
  p.grid.array() = 0.5;
  p.flags.array() = 0.2;
  CHECK(loss(p, t, cfg).total == 0.0);
}

TEST_CASE("mismatched shapes are rejected") {
  const Targets t = perfect_targets(2);
  Predictions p = as_prediction(perfect_targets(3));
  CHECK_THROWS_AS(loss(p, t, TrainConfig{}), Error);
}

TEST_CASE("training on ten records lowers the loss") {
  const SimConfig sim;
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.batch_size = 10;
  cfg.hidden = {32, 32};
  const auto recs = tiny_records(10);
  REQUIRE(recs.size() == 10);
  const LearnerModel m = train(recs, cfg, sim);
  REQUIRE(m.loss_curve().size() == 200);
  CHECK(m.loss_curve().back().terms.total < m.loss_curve().front().terms.total);
  CHECK(m.all_finite());
}

TEST_CASE("training is deterministic for a fixed seed") {
  const SimConfig sim;
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.hidden = {16};
  cfg.seed = 4;
  const auto recs = tiny_records(20);
  const LearnerModel a = train(recs, cfg, sim);
  const LearnerModel b = train(recs, cfg, sim);
  CHECK(a == b);
  CHECK(a.to_json().dump() == b.to_json().dump());
  CHECK(LearnerModel::from_json(a.to_json()) == a);
}

TEST_CASE("analytic gradients match central differences") {
  const SimConfig sim;
  TrainConfig cfg;
  cfg.hidden = {16, 8};
  const auto recs = tiny_records(5);
  const TrainingBatch b = make_batch(recs, sim);
  const LearnerModel m(input_dim(sim.sensor), cfg);
  const GradCheckResult g = gradient_check(m, b.x, b.targets, 12, 1);
  CHECK(g.checked > 0);
  CHECK(g.max_relative_error < 1e-4);
}

TEST_CASE("a model memorizing one record reproduces its waypoints") {
  const SimConfig sim;
  TrainConfig cfg;
  cfg.epochs = 600;
  cfg.batch_size = 1;
  cfg.learning_rate = 3e-3;
  cfg.hidden = {32, 32};
  const auto recs = tiny_records(1);
  const LearnerModel m = train(recs, cfg, sim);
  const Predictions p = predict(m, encode_sensors(recs[0].sensor_obs, sim));
  for (int k = 0; k < kHorizon; ++k) {
    CHECK(std::abs(p.waypoints(2 * k, 0) - recs[0].action.waypoints[k].x) < 0.1);
    CHECK(std::abs(p.waypoints(2 * k + 1, 0) - recs[0].action.waypoints[k].y) < 0.1);
  }
}

TEST_CASE("stop probability above one half brakes") {
  const SimConfig sim;
  Eigen::VectorXd w(kWaypointOutputs);
  for (int k = 0; k < kHorizon; ++k) w[2 * k] = 0.5 * (k + 1), w[2 * k + 1] = 0.0;
  CHECK(decode_action(w, 0.9, 5.0, sim).brake == 1);
  CHECK(decode_action(w, 0.1, 5.0, sim).brake == 0);
}

TEST_CASE("decoded waypoints respect the speed limit") {
  const SimConfig sim;
  const double max_step = sim.physics.v_max * sim.physics.dt;
  Rng r(8);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd w(kWaypointOutputs);
    for (int i = 0; i < kWaypointOutputs; ++i) w[i] = r.uniform(-20.0, 20.0);
    if (trial == 0) w[3] = std::nan("");
    const Action a = decode_action(w, r.uniform(), 3.0, sim);
    Vec2 prev{0.0, 0.0};
    for (const Vec2& p : a.waypoints) {
      CHECK(std::isfinite(p.x));
      CHECK((p - prev).norm() <= max_step + 1e-9);
      prev = p;
    }
  }
}

TEST_CASE("empty datasets are rejected") {
  CHECK_THROWS_AS(train(std::span<const DemoRecord>{}, TrainConfig{}, SimConfig{}), Error);
}
