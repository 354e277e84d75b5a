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

#include "cfdrive/augment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>

#include "cfdrive/eval.hpp"
#include "cfdrive/expert.hpp"
#include "cfdrive/parallel.hpp"
#include "cfdrive/pid.hpp"

namespace cfdrive {

namespace {

constexpr double kLightRouteTolerance = 0.5;
constexpr double kConsistencyTolerance = 1e-9;

/// Signed distance from the ego front bumper to a stop line along the route.
double light_distance(const WorldState& w, const TrafficLight& l, const PhysicsConfig& p) {
  const double front = w.route->project(w.ego.position).s + 0.5 * p.ego_length;
  return w.route->project(l.stop_line).s - front;
}

int next_entity_id(const WorldState& w) {
  int id = 0;
  for (const Actor& a : w.actors) id = std::max(id, a.id);
  for (const TrafficLight& l : w.lights) id = std::max(id, l.id);
  return id + 1;
}

ActorKind actor_kind(KindCode k) {
  switch (k) {
    case KindCode::kPedestrian: return ActorKind::kPedestrian;
    case KindCode::kCyclist: return ActorKind::kCyclist;
    default: return ActorKind::kVehicle;
  }
}

[[noreturn]] void implausible(const std::string& why) { throw Error(ErrorCode::kImplausible, why); }

}  // namespace

AuxTargets aux_targets(const WorldState& world, const Action& expert_action, const SimConfig& cfg) {
  AuxTargets aux;
  const double half = 0.5 * kGridExtent;
  const double cell = kGridExtent / kGridSize;
  for (const Actor& a : world.actors) {
    const Vec2 rel = to_local(a.position, world.ego.position, world.ego.heading);
    if (rel.x < -half || rel.x >= half || rel.y < -half || rel.y >= half) continue;
    const int row = std::min(kGridSize - 1, static_cast<int>((rel.x + half) / cell));
    const int col = std::min(kGridSize - 1, static_cast<int>((rel.y + half) / cell));
    aux.grid[static_cast<std::size_t>(row * kGridSize + col)] = 1.0;
  }
  bool red_ahead = false;
  bool junction = false;
  for (const TrafficLight& l : world.lights) {
    const double d = light_distance(world, l, cfg.physics);
    if (l.phase == LightPhase::kRed && d >= 0.0 && d <= cfg.sensor.light_visibility) red_ahead = true;
    if (std::abs(d) <= kJunctionRadius) junction = true;
  }
  if (red_ahead) {
    for (int k = 0; k < kGridSize * kGridSize; ++k) aux.grid[static_cast<std::size_t>(kGridSize * kGridSize + k)] = 1.0;
  }
  aux.flags[static_cast<std::size_t>(TrafficFlag::kRedLightAhead)] = red_ahead ? 1.0 : 0.0;
  aux.flags[static_cast<std::size_t>(TrafficFlag::kStopRequired)] = expert_action.brake ? 1.0 : 0.0;
  aux.flags[static_cast<std::size_t>(TrafficFlag::kAtJunction)] = junction ? 1.0 : 0.0;
  return aux;
}

void AugmentedDataset::recount() {
  n_cf = static_cast<int>(std::count_if(records.begin(), records.end(), [](const DemoRecord& r) { return r.is_cf; }));
  n_original = static_cast<int>(records.size()) - n_cf;
}

TemplateMix TemplateMix::uniform(std::span<const ScenarioTemplate> templates) {
  TemplateMix m;
  m.templates.assign(templates.begin(), templates.end());
  m.weights.assign(templates.size(), 1.0);
  return m;
}

ScenarioTemplate TemplateMix::sample(Rng& rng) const {
  if (templates.empty() || templates.size() != weights.size())
    throw Error(ErrorCode::kInvalidArgument, "template mix needs one weight per template");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "template weights must be non-negative");
    total += w;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::kInvalidArgument, "template weights sum to zero");
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < templates.size(); ++i) {
    if (u < weights[i]) return templates[i];
    u -= weights[i];
  }
  for (std::size_t i = templates.size(); i-- > 0;)
    if (weights[i] > 0.0) return templates[i];
  return templates.back();
}

std::vector<EpisodeSpec> plan_episodes(const TemplateMix& mix, int n_episodes, std::uint64_t seed) {
  if (n_episodes < 1) throw Error(ErrorCode::kInvalidArgument, "n_episodes must be >= 1");
  const std::size_t k = mix.templates.size();
  if (k == 0 || mix.weights.size() != k) throw Error(ErrorCode::kInvalidArgument, "template mix is empty or ragged");
  const double total = std::accumulate(mix.weights.begin(), mix.weights.end(), 0.0);
  if (!(total > 0.0)) throw Error(ErrorCode::kInvalidArgument, "template mix weights sum to zero");

  // Largest-remainder quotas, ties to the earlier template.
  std::vector<int> count(k);
  std::vector<std::pair<double, std::size_t>> remainder;
  int assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double q = n_episodes * mix.weights[i] / total;
    count[i] = static_cast<int>(std::floor(q));
    assigned += count[i];
    remainder.emplace_back(q - count[i], i);
  }
  std::stable_sort(remainder.begin(), remainder.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int r = 0; assigned < n_episodes; ++r, ++assigned) ++count[remainder[static_cast<std::size_t>(r)].second];

  std::vector<ScenarioTemplate> order;
  for (std::size_t i = 0; i < k; ++i) order.insert(order.end(), static_cast<std::size_t>(count[i]), mix.templates[i]);
  Rng shuffle_rng(derive_seed(seed, 0x9A7EULL));
  shuffle_rng.shuffle(order);

  std::vector<EpisodeSpec> out;
  for (int e = 0; e < n_episodes; ++e) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(e)));
    out.push_back({order[static_cast<std::size_t>(e)], rng.next_u64()});
  }
  return out;
}

void expert_rollout(ScenarioTemplate scenario, std::uint64_t seed, int max_steps, const SimConfig& cfg,
                    const std::function<bool(const WorldState&, const Action&)>& on_step) {
  WorldState world = spawn_scenario(scenario, seed, cfg);
  PidController pid(cfg.pid, cfg.physics);
  const int budget = std::min(max_steps, timeout_steps(world, cfg.physics));
  bool arrived = false, fatal = false;
  for (int steps = 0; steps < budget && !arrived && !fatal; ++steps) {
    const Action action = expert_act(world, cfg);
    if (!on_step(world, action)) return;
    const Control control = pid(world, action);
    StepResult next = step(world, control, cfg);
    world = std::move(next.world);
    for (const InfractionEvent& e : next.events) fatal = fatal || is_fatal(e.kind);
    arrived = world.progress >= world.route_length - kArrivalTolerance;
  }
}

DemoRecord make_record(const WorldState& world, const Action& action, const SimConfig& cfg, Rng& sensor_rng) {
  DemoRecord r;
  r.sensor_obs = render_sensors(world, cfg.sensor, sensor_rng);
  r.filtered_obs = filter_observation(world);
  r.action = action;
  r.action_class = discretize_action(action, cfg);
  r.aux = aux_targets(world, action, cfg);
  r.scenario_id = world.scenario_id;
  r.seed = world.seed;
  r.time_step = world.time_step;
  return r;
}

std::vector<DemoRecord> collect_demonstrations(std::span<const EpisodeSpec> episodes, int max_steps,
                                               const SimConfig& cfg, int workers) {
  if (episodes.empty()) throw Error(ErrorCode::kInvalidArgument, "n_episodes must be >= 1");
  std::vector<std::vector<DemoRecord>> per_episode(episodes.size());
  parallel_for(episodes.size(), workers, [&](std::size_t i) {
    const EpisodeSpec& ep = episodes[i];
    expert_rollout(ep.scenario, ep.seed, max_steps, cfg, [&](const WorldState& w, const Action& a) {
      Rng rng = sensor_stream(ep.seed, w.time_step);
      per_episode[i].push_back(make_record(w, a, cfg, rng));
      return true;
    });
  });
  std::vector<DemoRecord> out;
  for (auto& v : per_episode) std::move(v.begin(), v.end(), std::back_inserter(out));
  return out;
}

std::vector<DemoRecord> collect_demonstrations(const TemplateMix& mix, int n_episodes, std::uint64_t seed,
                                               int max_steps, const SimConfig& cfg, int workers) {
  const std::vector<EpisodeSpec> plan = plan_episodes(mix, n_episodes, seed);
  return collect_demonstrations(plan, max_steps, cfg, workers);
}

WorldState replay_world(const DemoRecord& record, int max_steps, const SimConfig& cfg) {
  std::optional<WorldState> found;
  expert_rollout(static_cast<ScenarioTemplate>(record.scenario_id), record.seed, max_steps, cfg,
                 [&](const WorldState& w, const Action&) {
                   if (w.time_step < record.time_step) return true;
                   found = w;
                   return false;
                 });
  if (!found || found->time_step != record.time_step || !(filter_observation(*found) == record.filtered_obs))
    throw Error(ErrorCode::kInvalidArgument, "replay does not reproduce the recorded step " +
                                                 std::to_string(record.time_step) + " of episode " +
                                                 std::to_string(record.seed));
  return *found;
}

WorldState realize_scene(const WorldState& world, const FilteredObs& o_prime, const SimConfig& cfg) {
  const FilteredObs o = filter_observation(world);
  const PhysicsConfig& p = cfg.physics;
  WorldState out = world;
  std::vector<int> changed_actors;
  std::vector<int> changed_lights;
  std::array<int, kSlots> slot_ids = o.source_ids;
  int next_id = next_entity_id(world);

  for (int s = 0; s < kSlots; ++s) {
    const int id = o.source_ids[static_cast<std::size_t>(s)];
    const bool was_padding = o.is_sentinel(s);
    const bool now_padding = o_prime.is_sentinel(s) || o_prime.at(s, SlotField::kRelX) >= kSentinelX;
    if (!was_padding && !now_padding && o.kind(s) != o_prime.kind(s))
      throw Error(ErrorCode::kInvalidArgument, "counterfactual slot kinds do not match the world");
    if (was_padding && now_padding) continue;
    const Vec2 rel_prime{o_prime.at(s, SlotField::kRelX), o_prime.at(s, SlotField::kRelY)};

    if (!was_padding && now_padding) {
      if (o.kind(s) == KindCode::kTrafficLight) {
        std::erase_if(out.lights, [id](const TrafficLight& l) { return l.id == id; });
      } else {
        std::erase_if(out.actors, [id](const Actor& a) { return a.id == id; });
      }
      slot_ids[static_cast<std::size_t>(s)] = -1;
      continue;
    }

    if (was_padding) {
      const int new_id = next_id++;
      slot_ids[static_cast<std::size_t>(s)] = new_id;
      const Vec2 pos = to_global(rel_prime, world.ego.position, world.ego.heading);
      if (o_prime.kind(s) == KindCode::kTrafficLight) {
        TrafficLight l;
        l.id = new_id;
        l.stop_line = pos;
        l.phase = phase_from_code(static_cast<PhaseCode>(static_cast<int>(o_prime.at(s, SlotField::kPhase))));
        out.lights.push_back(l);
        changed_lights.push_back(new_id);
      } else {
        Actor a;
        a.id = new_id;
        a.kind = actor_kind(o_prime.kind(s));
        a.position = pos;
        a.heading = normalize_angle(world.ego.heading + o_prime.at(s, SlotField::kRelHeading));
        a.speed = o_prime.at(s, SlotField::kSpeed);
        a.behavior = a.speed > 0.0 ? Behavior::kCruise : Behavior::kStatic;
        a.script.cruise_speed = a.speed;
        out.actors.push_back(a);
        changed_actors.push_back(new_id);
      }
      continue;
    }

    const bool moved = o.at(s, SlotField::kRelX) != rel_prime.x || o.at(s, SlotField::kRelY) != rel_prime.y;
    if (o.kind(s) == KindCode::kTrafficLight) {
      auto it = std::find_if(out.lights.begin(), out.lights.end(), [id](const TrafficLight& l) { return l.id == id; });
      if (moved) {
        it->stop_line = to_global(rel_prime, world.ego.position, world.ego.heading);
        changed_lights.push_back(id);
      }
      if (o.at(s, SlotField::kPhase) != o_prime.at(s, SlotField::kPhase)) {
        it->phase = phase_from_code(static_cast<PhaseCode>(static_cast<int>(o_prime.at(s, SlotField::kPhase))));
        it->phase_timer = 0.0;
      }
      continue;
    }
    auto it = std::find_if(out.actors.begin(), out.actors.end(), [id](const Actor& a) { return a.id == id; });
    bool changed = false;
    if (moved) {
      it->position = to_global(rel_prime, world.ego.position, world.ego.heading);
      changed = true;
    }
    if (o.at(s, SlotField::kRelHeading) != o_prime.at(s, SlotField::kRelHeading)) {
      it->heading = normalize_angle(world.ego.heading + o_prime.at(s, SlotField::kRelHeading));
      changed = true;
    }
    if (o.at(s, SlotField::kSpeed) != o_prime.at(s, SlotField::kSpeed)) {
      it->speed = o_prime.at(s, SlotField::kSpeed);
      changed = true;
    }
    if (changed) changed_actors.push_back(id);
  }

  const Box ego = ego_box(out.ego, p);
  for (int id : changed_actors) {
    const Actor& a = *std::find_if(out.actors.begin(), out.actors.end(), [id](const Actor& x) { return x.id == id; });
    const Box box = actor_box(a);
    if (boxes_overlap(box, ego)) implausible("counterfactual actor overlaps the ego vehicle");
    for (const Actor& other : out.actors) {
      if (other.id != id && boxes_overlap(box, actor_box(other)))
        implausible("counterfactual actor overlaps actor " + std::to_string(other.id));
    }
    if (std::abs(out.route->project(a.position).lateral) > p.drivable_half_width)
      implausible("counterfactual actor leaves the drivable band");
  }
  for (const TrafficLight& l : out.lights) {
    if (std::find(changed_lights.begin(), changed_lights.end(), l.id) == changed_lights.end()) continue;
    if (std::abs(out.route->project(l.stop_line).lateral) > kLightRouteTolerance)
      implausible("counterfactual stop line is off the route");
  }

  const FilteredObs back = filter_observation(out);
  for (int s = 0; s < kSlots; ++s) {
    const int id = back.source_ids[static_cast<std::size_t>(s)];
    if (back.is_sentinel(s)) {
      const bool expected = std::count(slot_ids.begin(), slot_ids.end(), -1) > 0;
      if (!expected) implausible("counterfactual scene filters to fewer entities");
      continue;
    }
    const auto it = std::find(slot_ids.begin(), slot_ids.end(), id);
    if (it == slot_ids.end()) implausible("another entity enters the four nearest after realization");
    const int src = static_cast<int>(it - slot_ids.begin());
    for (int f = 0; f < kSlotWidth; ++f) {
      const auto field = static_cast<SlotField>(f);
      if (std::abs(back.at(s, field) - o_prime.at(src, field)) > kConsistencyTolerance)
        implausible("realized scene does not reproduce the counterfactual observation");
    }
  }
  if (std::abs(back.ego_speed() - o_prime.ego_speed()) > kConsistencyTolerance)
    implausible("counterfactual changes the ego speed");
  return out;
}

DemoRecord relabel_and_record(const WorldState& world_prime, const DemoRecord& source, const CFExample& cf,
                              const SimConfig& cfg, Rng& sensor_rng) {
  const Action a = expert_act(world_prime, cfg);
  DemoRecord r = make_record(world_prime, a, cfg, sensor_rng);
  r.scenario_id = source.scenario_id;
  r.seed = source.seed;
  r.time_step = source.time_step;
  r.is_cf = true;
  r.cf_meta = CFMeta{cf.distance, cf.lambda_final, cf.original_class, cf.target_class,
                     r.action_class == cf.target_class};
  return r;
}

int required_cf_count(int n_original, double target_fraction) {
  if (!(target_fraction >= 0.0 && target_fraction <= 0.5))
    throw Error(ErrorCode::kInvalidArgument, "target CF fraction must lie in [0, 0.5]");
  return static_cast<int>(std::llround(target_fraction * n_original / (1.0 - target_fraction)));
}

AugmentedDataset build_dataset(std::span<const DemoRecord> demos, std::span<const DemoRecord> cf_records,
                               double target_fraction, std::uint64_t seed) {
  AugmentedDataset ds;
  ds.records.assign(demos.begin(), demos.end());
  ds.recount();
  const int need = required_cf_count(ds.n_original, target_fraction);
  if (need == 0) return ds;
  const int take = std::min<int>(need, static_cast<int>(cf_records.size()));
  ds.records.insert(ds.records.end(), cf_records.begin(), cf_records.begin() + take);
  ds.cf_shortfall = need - take;
  Rng rng(derive_seed(seed, 0xDA7A5E7ULL));
  rng.shuffle(ds.records);
  ds.recount();
  return ds;
}

AugmentResult augment(std::span<const DemoRecord> demos, const TreeModel& model, const AugmentConfig& cfg,
                      int max_steps, const SimConfig& sim) {
  AugmentResult result;
  std::vector<std::size_t> originals;
  std::vector<FilteredObs> pool;
  for (std::size_t i = 0; i < demos.size(); ++i) {
    if (demos[i].is_cf) continue;
    originals.push_back(i);
    pool.push_back(demos[i].filtered_obs);
  }
  const int need = required_cf_count(static_cast<int>(originals.size()), cfg.target_cf_fraction);
  if (need == 0) {
    result.dataset = build_dataset(demos, {}, 0.0, cfg.seed);
    return result;
  }
  CFConfig cf_cfg = cfg.cf;
  if (cf_cfg.feature_scales.empty()) cf_cfg.feature_scales = mad_scales(pool);
  Rng order_rng(derive_seed(cfg.seed, 0x5EEDULL));
  order_rng.shuffle(originals);

  struct SeedOutcome {
    std::vector<DemoRecord> records;
    AugmentStats stats;
  };
  std::vector<DemoRecord> cf_records;
  const std::size_t batch = static_cast<std::size_t>(std::max(cfg.batch, 1));
  for (std::size_t start = 0; start < originals.size() && static_cast<int>(cf_records.size()) < need;
       start += batch) {
    const std::size_t n = std::min(batch, originals.size() - start);
    std::vector<SeedOutcome> outcomes(n);
    parallel_for(n, cfg.workers, [&](std::size_t k) {
      const std::size_t index = originals[start + k];
      const DemoRecord& src = demos[index];
      SeedOutcome& out = outcomes[k];
      out.stats.seeds_tried = 1;
      const WorldState world = replay_world(src, max_steps, sim);
      const ActionClass current = predict_class(model, src.filtered_obs.features);
      for (int t = 0; t < kNumClasses; ++t) {
        const auto target = static_cast<ActionClass>(t);
        if (target == current) continue;
        ++out.stats.searches;
        const std::uint64_t seed = derive_seed(cfg.seed, index, static_cast<std::uint64_t>(t));
        const std::vector<CFExample> found = generate_diverse_cfs(model, src.filtered_obs, target, cf_cfg, seed);
        if (found.empty()) ++out.stats.search_failures;
        out.stats.cfs_found += static_cast<int>(found.size());
        for (std::size_t j = 0; j < found.size(); ++j) {
          WorldState realized;
          try {
            realized = realize_scene(world, found[j].cf, sim);
          } catch (const Error& e) {
            if (e.code() != ErrorCode::kImplausible) throw;
            ++out.stats.implausible;
            continue;
          }
          Rng sensor_rng(derive_seed(seed, j, 0x5E45ULL));
          DemoRecord r = relabel_and_record(realized, src, found[j], sim, sensor_rng);
          ++out.stats.realized;
          out.stats.expert_agreed += r.cf_meta->expert_agreed ? 1 : 0;
          out.records.push_back(std::move(r));
        }
      }
    });
    for (SeedOutcome& o : outcomes) {
      if (static_cast<int>(cf_records.size()) >= need) break;
      AugmentStats& s = result.stats;
      s.seeds_tried += o.stats.seeds_tried;
      s.searches += o.stats.searches;
      s.search_failures += o.stats.search_failures;
      s.cfs_found += o.stats.cfs_found;
      s.implausible += o.stats.implausible;
      s.realized += o.stats.realized;
      s.expert_agreed += o.stats.expert_agreed;
      std::move(o.records.begin(), o.records.end(), std::back_inserter(cf_records));
    }
  }
  result.dataset = build_dataset(demos, cf_records, cfg.target_cf_fraction, cfg.seed);
  const auto total = static_cast<double>(result.dataset.records.size());
  result.stats.cf_fraction = total > 0 ? result.dataset.n_cf / total : 0.0;
  return result;
}

std::vector<LabeledObs> labeled_observations(std::span<const DemoRecord> records) {
  std::vector<LabeledObs> out;
  out.reserve(records.size());
  for (const DemoRecord& r : records) out.push_back({r.filtered_obs.features, r.action_class});
  return out;
}

Json to_json(const DemoRecord& r) {
  Json j{{"scenario", template_name(static_cast<ScenarioTemplate>(r.scenario_id))},
         {"seed", r.seed},
         {"time_step", r.time_step},
         {"is_cf", r.is_cf},
         {"sensor_obs", r.sensor_obs},
         {"filtered_obs", r.filtered_obs.features},
         {"source_ids", r.filtered_obs.source_ids},
         {"action", r.action},
         {"action_class", static_cast<int>(r.action_class)},
         {"aux", {{"grid", r.aux.grid}, {"flags", r.aux.flags}}}};
  if (r.cf_meta) {
    const CFMeta& m = *r.cf_meta;
    j["cf_meta"] = Json{{"distance", m.distance},
                        {"lambda_final", m.lambda_final},
                        {"original_class", static_cast<int>(m.original_class)},
                        {"target_class", static_cast<int>(m.target_class)},
                        {"expert_agreed", m.expert_agreed}};
  }
  return j;
}

namespace {

ActionClass class_from_json(const Json& j) {
  const int c = j.get<int>();
  if (c < 0 || c >= kNumClasses) throw Error(ErrorCode::kParse, "action class out of range");
  return static_cast<ActionClass>(c);
}

}  // namespace

DemoRecord record_from_json(const Json& j) {
  try {
    DemoRecord r;
    r.scenario_id = static_cast<int>(parse_template(j.at("scenario").get<std::string>()));
    r.seed = j.at("seed").get<std::uint64_t>();
    r.time_step = j.at("time_step").get<int>();
    r.is_cf = j.at("is_cf").get<bool>();
    r.sensor_obs = j.at("sensor_obs").get<SensorObs>();
    r.filtered_obs = FilteredObs::from_features(j.at("filtered_obs").get<std::vector<double>>());
    r.filtered_obs.source_ids = j.at("source_ids").get<std::array<int, kSlots>>();
    r.action = j.at("action").get<Action>();
    r.action_class = class_from_json(j.at("action_class"));
    r.aux.grid = j.at("aux").at("grid").get<std::array<double, kGridValues>>();
    r.aux.flags = j.at("aux").at("flags").get<std::array<double, kFlagCount>>();
    if (j.contains("cf_meta")) {
      const Json& m = j.at("cf_meta");
      r.cf_meta = CFMeta{m.at("distance").get<double>(), m.at("lambda_final").get<double>(),
                         class_from_json(m.at("original_class")), class_from_json(m.at("target_class")),
                         m.at("expert_agreed").get<bool>()};
    }
    if (r.is_cf && !r.cf_meta) throw Error(ErrorCode::kParse, "counterfactual record without cf_meta");
    return r;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParse, e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
}

Json dataset_schema() {
  Json features = Json::array();
  for (const FeatureInfo& f : feature_schema()) {
    features.push_back(Json{{"name", f.name}, {"index", f.index}, {"unit", f.unit}, {"frozen", f.frozen},
                            {"integer", f.integer}});
  }
  return Json{{"format", "cfdrive.dataset"},
              {"version", kDatasetSchemaVersion},
              {"record_fields",
               {"scenario", "seed", "time_step", "is_cf", "sensor_obs", "filtered_obs", "source_ids", "action",
                "action_class", "aux", "cf_meta"}},
              {"classes", {"GO", "SLOW", "STOP"}},
              {"aux", {{"grid_size", kGridSize}, {"grid_channels", kGridChannels}, {"grid_extent_m", kGridExtent},
                       {"flags", {"red_light_ahead", "stop_required", "at_junction"}}}},
              {"filtered_features", features}};
}

std::string schema_path_for(const std::string& dataset_path) { return dataset_path + ".schema.json"; }

void write_dataset(const std::string& path, const AugmentedDataset& dataset) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  for (const DemoRecord& r : dataset.records) out << to_json(r).dump() << '\n';
  Json schema = dataset_schema();
  schema["counts"] = {{"n_original", dataset.n_original}, {"n_cf", dataset.n_cf}};
  std::ofstream side(schema_path_for(path), std::ios::binary);
  if (!side) throw Error(ErrorCode::kIo, "cannot write " + schema_path_for(path));
  side << schema.dump(2) << '\n';
}

AugmentedDataset read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  const std::string side = schema_path_for(path);
  if (std::filesystem::exists(side)) {
    std::ifstream s(side);
    Json schema;
    try {
      schema = Json::parse(s);
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::kParse, side + ": " + e.what());
    }
    if (schema.value("version", 0) != kDatasetSchemaVersion)
      throw Error(ErrorCode::kParse, side + ": unsupported dataset schema version");
  }
  AugmentedDataset ds;
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    try {
      ds.records.push_back(record_from_json(Json::parse(line)));
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kParse, path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  ds.recount();
  return ds;
}

}  // namespace cfdrive
