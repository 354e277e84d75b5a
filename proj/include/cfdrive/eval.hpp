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

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cfdrive/action.hpp"
#include "cfdrive/config.hpp"
#include "cfdrive/world.hpp"

namespace cfdrive {

/// Closed-loop driving policy. Privileged policies read the world state;
/// sensor policies only receive the rendered SensorObs.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual bool uses_sensors() const = 0;
  virtual Action act(const WorldState& world, const SensorObs* sensors) = 0;
};

class ExpertPolicy final : public Policy {
 public:
  explicit ExpertPolicy(SimConfig cfg) : cfg_(std::move(cfg)) {}
  std::string name() const override { return "expert"; }
  bool uses_sensors() const override { return false; }
  Action act(const WorldState& world, const SensorObs*) override;

 private:
  SimConfig cfg_;
};

/// Always brakes; used to exercise the timeout path.
class BrakePolicy final : public Policy {
 public:
  std::string name() const override { return "always_brake"; }
  bool uses_sensors() const override { return false; }
  Action act(const WorldState&, const SensorObs*) override;
};

/// Collisions end the episode.
bool is_fatal(InfractionKind k);
/// The route counts as completed within this many metres of its end.
inline constexpr double kArrivalTolerance = 1.0;

struct EpisodeResult {
  double route_completion = 0.0;  // percent
  std::vector<InfractionEvent> infractions;
  int steps_used = 0;
  int timeout_steps = 0;
  int scenario_id = 0;
  std::uint64_t seed = 0;
  friend bool operator==(const EpisodeResult&, const EpisodeResult&) = default;
};

struct PenaltyTable {
  std::array<double, kInfractionKinds> coefficient{0.50, 0.60, 0.65, 0.70, 0.80, 0.70};
  double operator[](InfractionKind k) const { return coefficient[static_cast<std::size_t>(k)]; }
};

struct EvalReport {
  std::vector<EpisodeResult> routes;
  double driving_score = 0.0;
  double route_completion_mean = 0.0;
  double infraction_score_mean = 0.0;
  /// Events per route, indexed by InfractionKind.
  std::array<double, kInfractionKinds> infraction_rates{};
};

/// Optional JSON-lines trace of every simulated step.
struct TraceSink {
  std::ostream* out = nullptr;
};

EpisodeResult run_episode(Policy& policy, ScenarioTemplate scenario, std::uint64_t seed, int max_steps,
                          const SimConfig& cfg, TraceSink trace = {});

/// Product of per-event coefficients; ROUTE_TIMEOUT counts at most once.
double infraction_score(const EpisodeResult& result, const PenaltyTable& penalties = {});

/// Throws Error(kEmptyResults) on an empty input.
EvalReport driving_score(std::span<const EpisodeResult> results, const PenaltyTable& penalties = {});

struct EvalCase {
  ScenarioTemplate scenario = ScenarioTemplate::kClearRoad;
  std::uint64_t seed = 0;
};

/// Runs each case with a fresh policy from `make_policy`, using up to
/// `workers` threads. Results come back in case order.
std::vector<EpisodeResult> run_suite(const std::function<std::unique_ptr<Policy>()>& make_policy,
                                     std::span<const EvalCase> cases, int max_steps, const SimConfig& cfg,
                                     int workers = 1);

// Report I/O.
std::string report_to_json(const EvalReport& report, const std::string& method);
std::string table_csv_header();
std::string table_csv_row(const std::string& method, const EvalReport& report);

}  // namespace cfdrive
