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

#include "cfdrive/eval.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "cfdrive/expert.hpp"
#include "cfdrive/json_io.hpp"
#include "cfdrive/parallel.hpp"
#include "cfdrive/pid.hpp"

namespace cfdrive {

Action ExpertPolicy::act(const WorldState& world, const SensorObs*) { return expert_act(world, cfg_); }

Action BrakePolicy::act(const WorldState&, const SensorObs*) {
  Action a;
  a.brake = 1;
  a.class_hint = ActionClass::kStop;
  return a;
}

bool is_fatal(InfractionKind k) {
  return k == InfractionKind::kPedestrianCollision || k == InfractionKind::kVehicleCollision ||
         k == InfractionKind::kLayoutCollision;
}

EpisodeResult run_episode(Policy& policy, ScenarioTemplate scenario, std::uint64_t seed, int max_steps,
                          const SimConfig& cfg, TraceSink trace) {
  if (max_steps < 1) throw Error(ErrorCode::kInvalidArgument, "max_steps must be >= 1");
  WorldState world = spawn_scenario(scenario, seed, cfg);
  PidController pid(cfg.pid, cfg.physics);

  EpisodeResult result;
  result.scenario_id = world.scenario_id;
  result.seed = seed;
  result.timeout_steps = timeout_steps(world, cfg.physics);
  const int budget = std::min(max_steps, result.timeout_steps);

  bool arrived = false;
  bool fatal = false;
  int steps = 0;
  while (steps < budget && !arrived && !fatal) {
    Action action;
    if (policy.uses_sensors()) {
      Rng rng = sensor_stream(seed, world.time_step);
      const SensorObs obs = render_sensors(world, cfg.sensor, rng);
      action = policy.act(world, &obs);
    } else {
      action = policy.act(world, nullptr);
    }
    const Control control = pid(world, action);
    StepResult next = step(world, control, cfg);
    world = std::move(next.world);
    ++steps;
    for (const InfractionEvent& e : next.events) {
      result.infractions.push_back(e);
      fatal = fatal || is_fatal(e.kind);
    }
    if (trace.out) *trace.out << trace_line(world, control, next.events).dump() << '\n';
    arrived = world.progress >= world.route_length - kArrivalTolerance;
  }
  result.steps_used = steps;
  result.route_completion =
      arrived ? 100.0 : std::clamp(100.0 * world.progress / world.route_length, 0.0, 100.0);
  if (!arrived && !fatal) {
    result.infractions.push_back({InfractionKind::kRouteTimeout, world.time_step, -1});
  }
  return result;
}

double infraction_score(const EpisodeResult& result, const PenaltyTable& penalties) {
  double score = 1.0;
  bool timeout_applied = false;
  for (const InfractionEvent& e : result.infractions) {
    if (e.kind == InfractionKind::kRouteTimeout) {
      if (timeout_applied) continue;
      timeout_applied = true;
    }
    score *= penalties[e.kind];
  }
  return score;
}

EvalReport driving_score(std::span<const EpisodeResult> results, const PenaltyTable& penalties) {
  if (results.empty()) throw Error(ErrorCode::kEmptyResults, "driving score needs at least one route");
  EvalReport report;
  report.routes.assign(results.begin(), results.end());
  // Deterministic fold ordered by (scenario_id, seed).
  std::vector<std::size_t> order(results.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (results[a].scenario_id != results[b].scenario_id) return results[a].scenario_id < results[b].scenario_id;
    return results[a].seed < results[b].seed;
  });
  double score_sum = 0.0, completion_sum = 0.0, infraction_sum = 0.0;
  std::array<double, kInfractionKinds> counts{};
  for (std::size_t i : order) {
    const EpisodeResult& r = results[i];
    const double inf = infraction_score(r, penalties);
    score_sum += r.route_completion * inf;
    completion_sum += r.route_completion;
    infraction_sum += inf;
    for (const InfractionEvent& e : r.infractions) counts[static_cast<std::size_t>(e.kind)] += 1.0;
  }
  const double n = static_cast<double>(results.size());
  report.driving_score = score_sum / n;
  report.route_completion_mean = completion_sum / n;
  report.infraction_score_mean = infraction_sum / n;
  for (std::size_t k = 0; k < counts.size(); ++k) report.infraction_rates[k] = counts[k] / n;
  return report;
}

std::vector<EpisodeResult> run_suite(const std::function<std::unique_ptr<Policy>()>& make_policy,
                                     std::span<const EvalCase> cases, int max_steps, const SimConfig& cfg,
                                     int workers) {
  std::vector<EpisodeResult> results(cases.size());
  parallel_for(cases.size(), workers, [&](std::size_t i) {
    auto policy = make_policy();
    results[i] = run_episode(*policy, cases[i].scenario, cases[i].seed, max_steps, cfg);
  });
  return results;
}

std::string report_to_json(const EvalReport& report, const std::string& method) {
  Json routes = Json::array();
  for (const EpisodeResult& r : report.routes) {
    routes.push_back(Json{{"scenario", template_name(static_cast<ScenarioTemplate>(r.scenario_id))},
                          {"seed", r.seed},
                          {"route_completion", r.route_completion},
                          {"infraction_score", infraction_score(r)},
                          {"steps_used", r.steps_used},
                          {"timeout_steps", r.timeout_steps},
                          {"infractions", r.infractions}});
  }
  Json rates = Json::object();
  for (int k = 0; k < kInfractionKinds; ++k) {
    rates[std::string(infraction_name(static_cast<InfractionKind>(k)))] =
        report.infraction_rates[static_cast<std::size_t>(k)];
  }
  Json j{{"method", method},
         {"driving_score", report.driving_score},
         {"route_completion", report.route_completion_mean},
         {"infraction_score", report.infraction_score_mean},
         {"infraction_rates", rates},
         {"routes", routes}};
  return j.dump(2);
}

std::string table_csv_header() {
  std::string h = "method,driving_score,route_completion,infraction_score";
  for (int k = 0; k < kInfractionKinds; ++k) {
    h += ',';
    h += infraction_name(static_cast<InfractionKind>(k));
  }
  return h;
}

std::string table_csv_row(const std::string& method, const EvalReport& report) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(4);
  os << method << ',' << report.driving_score << ',' << report.route_completion_mean << ','
     << report.infraction_score_mean;
  for (double r : report.infraction_rates) os << ',' << r;
  return os.str();
}

}  // namespace cfdrive
