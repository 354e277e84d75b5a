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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cfdrive/action.hpp"
#include "cfdrive/cf.hpp"
#include "cfdrive/config.hpp"
#include "cfdrive/json_io.hpp"
#include "cfdrive/observation.hpp"
#include "cfdrive/trees.hpp"
#include "cfdrive/world.hpp"

namespace cfdrive {

inline constexpr int kGridSize = 5;
inline constexpr int kGridChannels = 2;  // occupancy, red-light relevance
inline constexpr int kGridValues = kGridSize * kGridSize * kGridChannels;
inline constexpr double kGridExtent = 25.0;  // metres, centred on the ego
inline constexpr int kFlagCount = 3;
inline constexpr double kJunctionRadius = 10.0;

enum class TrafficFlag : int { kRedLightAhead = 0, kStopRequired = 1, kAtJunction = 2 };

/// Auxiliary learner targets derived from the privileged world state.
/// Grid layout is channel-major, then row (ego x), then column (ego y).
struct AuxTargets {
  std::array<double, kGridValues> grid{};
  std::array<double, kFlagCount> flags{};
  friend bool operator==(const AuxTargets&, const AuxTargets&) = default;
};

AuxTargets aux_targets(const WorldState& world, const Action& expert_action, const SimConfig& cfg);

struct CFMeta {
  double distance = 0.0;
  double lambda_final = 0.0;
  ActionClass original_class = ActionClass::kGo;
  ActionClass target_class = ActionClass::kGo;
  bool expert_agreed = false;
  friend bool operator==(const CFMeta&, const CFMeta&) = default;
};

struct DemoRecord {
  SensorObs sensor_obs;
  FilteredObs filtered_obs;
  Action action;
  ActionClass action_class = ActionClass::kGo;
  AuxTargets aux;
  int scenario_id = 0;
  std::uint64_t seed = 0;  // episode seed
  int time_step = 0;
  bool is_cf = false;
  std::optional<CFMeta> cf_meta;
  friend bool operator==(const DemoRecord&, const DemoRecord&) = default;
};

inline constexpr int kDatasetSchemaVersion = 1;

struct AugmentedDataset {
  std::vector<DemoRecord> records;
  int n_original = 0;
  int n_cf = 0;
  int schema_version = kDatasetSchemaVersion;
  /// CF records the target fraction called for but the search could not supply.
  int cf_shortfall = 0;

  void recount();
};

/// Weighted scenario mix for collection.
struct TemplateMix {
  std::vector<ScenarioTemplate> templates;
  std::vector<double> weights;

  static TemplateMix uniform(std::span<const ScenarioTemplate> templates);
  ScenarioTemplate sample(Rng& rng) const;
};

struct EpisodeSpec {
  ScenarioTemplate scenario = ScenarioTemplate::kClearRoad;
  std::uint64_t seed = 0;
};

/// Template counts follow the mix weights by largest remainder, in a
/// seeded order; episode e draws its seed from derive_seed(seed, e).
std::vector<EpisodeSpec> plan_episodes(const TemplateMix& mix, int n_episodes, std::uint64_t seed);

/// Expert closed loop with the same termination rules as run_episode.
/// `on_step` sees each pre-step world and the expert action taken there;
/// returning false stops the rollout.
void expert_rollout(ScenarioTemplate scenario, std::uint64_t seed, int max_steps, const SimConfig& cfg,
                    const std::function<bool(const WorldState&, const Action&)>& on_step);

DemoRecord make_record(const WorldState& world, const Action& action, const SimConfig& cfg, Rng& sensor_rng);

std::vector<DemoRecord> collect_demonstrations(std::span<const EpisodeSpec> episodes, int max_steps,
                                               const SimConfig& cfg, int workers = 1);
std::vector<DemoRecord> collect_demonstrations(const TemplateMix& mix, int n_episodes, std::uint64_t seed,
                                               int max_steps, const SimConfig& cfg, int workers = 1);

/// Rebuilds the world a record was taken from by replaying its episode.
/// Throws Error(kInvalidArgument) if the replay does not reproduce the record.
WorldState replay_world(const DemoRecord& record, int max_steps, const SimConfig& cfg);

/// Writes o_prime back into the world. Throws Error(kImplausible) when the
/// result overlaps, leaves the drivable band, or would not filter back to
/// o_prime.
WorldState realize_scene(const WorldState& world, const FilteredObs& o_prime, const SimConfig& cfg);

DemoRecord relabel_and_record(const WorldState& world_prime, const DemoRecord& source, const CFExample& cf,
                              const SimConfig& cfg, Rng& sensor_rng);

struct AugmentConfig {
  double target_cf_fraction = 0.122;
  CFConfig cf;
  std::uint64_t seed = 0;
  int workers = 1;
  /// Seed records searched per deterministic batch.
  int batch = 32;
};

struct AugmentStats {
  int seeds_tried = 0;
  int searches = 0;
  int search_failures = 0;
  int cfs_found = 0;
  int implausible = 0;
  int realized = 0;
  int expert_agreed = 0;
  double cf_fraction = 0.0;
  double expert_agreement_rate() const { return realized ? static_cast<double>(expert_agreed) / realized : 0.0; }
};

/// Number of CF records that brings n_original to the target fraction.
int required_cf_count(int n_original, double target_fraction);

/// Originals plus the first CF records needed for the target fraction, then
/// a deterministic shuffle. Target 0 returns the demos unchanged.
AugmentedDataset build_dataset(std::span<const DemoRecord> demos, std::span<const DemoRecord> cf_records,
                               double target_fraction, std::uint64_t seed);

struct AugmentResult {
  AugmentedDataset dataset;
  AugmentStats stats;
};

/// Seeds CF search from uniformly sampled originals (all other classes as
/// targets), realizes and relabels each CF, and assembles the dataset.
AugmentResult augment(std::span<const DemoRecord> demos, const TreeModel& model, const AugmentConfig& cfg,
                      int max_steps, const SimConfig& sim);

std::vector<LabeledObs> labeled_observations(std::span<const DemoRecord> records);

// Persistence: JSON-lines records with a schema sidecar.
Json to_json(const DemoRecord& r);
DemoRecord record_from_json(const Json& j);
Json dataset_schema();
std::string schema_path_for(const std::string& dataset_path);
void write_dataset(const std::string& path, const AugmentedDataset& dataset);
/// Throws Error(kParse) naming the 1-based line of the first bad record.
AugmentedDataset read_dataset(const std::string& path);

}  // namespace cfdrive
