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

#include "cfdrive/ablation.hpp"

#include <chrono>
#include <sstream>

namespace cfdrive {

namespace {

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

EvalReport evaluate_learner(const LearnerModel& model, std::span<const EvalCase> cases, const AblationConfig& cfg,
                            const SimConfig& sim) {
  const auto results = run_suite([&] { return std::make_unique<LearnerPolicy>(model, sim); }, cases,
                                 cfg.max_steps, sim, cfg.workers);
  return driving_score(results, cfg.penalties);
}

}  // namespace

const ArmResult& AblationReport::arm(const std::string& name) const {
  for (const ArmResult& a : arms)
    if (a.name == name) return a;
  throw Error(ErrorCode::kNotFound, "no ablation arm named " + name);
}

std::vector<EvalCase> evaluation_cases(std::span<const ScenarioTemplate> templates, int routes_per_template,
                                       std::uint64_t seed) {
  std::vector<EvalCase> cases;
  for (ScenarioTemplate t : templates) {
    for (int i = 0; i < routes_per_template; ++i) {
      cases.push_back({t, derive_seed(seed + kEvalSeedOffset, static_cast<std::uint64_t>(t),
                                      static_cast<std::uint64_t>(i))});
    }
  }
  return cases;
}

AblationReport run_ablation(const AblationConfig& cfg, const SimConfig& sim) {
  AblationReport report;
  report.seed = cfg.seed;
  Stopwatch clock;

  const std::vector<DemoRecord> demos =
      collect_demonstrations(cfg.train_mix, cfg.train_episodes, cfg.seed, cfg.max_steps, sim, cfg.workers);
  report.timings.emplace_back("collect", clock.lap());

  const TreeModel tree = fit(labeled_observations(demos), cfg.tree);
  const std::vector<DemoRecord> holdout = collect_demonstrations(
      cfg.train_mix, cfg.holdout_episodes, cfg.seed + kHoldoutSeedOffset, cfg.max_steps, sim, cfg.workers);
  report.tree_agreement = agreement(tree, labeled_observations(holdout));
  report.timings.emplace_back("distill", clock.lap());

  AugmentConfig aug = cfg.augment;
  aug.seed = cfg.seed;
  aug.workers = cfg.workers;
  const AugmentResult augmented = augment(demos, tree, aug, cfg.max_steps, sim);
  report.augment_stats = augmented.stats;
  const int n_cf = augmented.dataset.n_cf;
  report.timings.emplace_back("augment", clock.lap());

  // Size-matched original-only arm: extra expert episodes from the same mix.
  std::vector<DemoRecord> matched = demos;
  for (int batch = 0; static_cast<int>(matched.size()) < static_cast<int>(demos.size()) + n_cf; ++batch) {
    const auto extra = collect_demonstrations(cfg.train_mix, cfg.train_episodes,
                                              derive_seed(cfg.seed + kExtraSeedOffset, static_cast<std::uint64_t>(batch)),
                                              cfg.max_steps, sim, cfg.workers);
    const std::size_t want = demos.size() + static_cast<std::size_t>(n_cf) - matched.size();
    matched.insert(matched.end(), extra.begin(), extra.begin() + static_cast<std::ptrdiff_t>(std::min(want, extra.size())));
  }
  report.timings.emplace_back("collect_matched", clock.lap());

  const std::vector<EvalCase> cases = evaluation_cases(cfg.eval_templates, cfg.eval_routes_per_template, cfg.seed);
  TrainConfig tc = cfg.train;
  tc.seed = derive_seed(cfg.seed, 0x7124ULL);

  const auto run_arm = [&](const std::string& name, std::span<const DemoRecord> data, int n_original, int n_cf_arm) {
    const LearnerModel model = train(data, tc, sim);
    report.arms.push_back({name, n_original, n_cf_arm, evaluate_learner(model, cases, cfg, sim)});
    report.timings.emplace_back("arm_" + name, clock.lap());
  };
  run_arm("original_n", demos, static_cast<int>(demos.size()), 0);
  run_arm("original_matched", matched, static_cast<int>(matched.size()), 0);
  run_arm("cf_augmented", augmented.dataset.records, augmented.dataset.n_original, n_cf);

  const auto expert = run_suite([&] { return std::make_unique<ExpertPolicy>(sim); }, cases, cfg.max_steps, sim,
                                cfg.workers);
  report.arms.push_back({"expert", 0, 0, driving_score(expert, cfg.penalties)});
  report.timings.emplace_back("expert", clock.lap());
  return report;
}

std::string ablation_csv(const AblationReport& report) {
  std::ostringstream os;
  os << table_csv_header() << '\n';
  for (const ArmResult& a : report.arms) os << table_csv_row(a.name, a.report) << '\n';
  return os.str();
}

Json ablation_to_json(const AblationReport& report) {
  Json arms = Json::array();
  for (const ArmResult& a : report.arms) {
    Json rates = Json::object();
    for (int k = 0; k < kInfractionKinds; ++k)
      rates[std::string(infraction_name(static_cast<InfractionKind>(k)))] = a.report.infraction_rates[static_cast<std::size_t>(k)];
    arms.push_back(Json{{"name", a.name},
                        {"n_original", a.n_original},
                        {"n_cf", a.n_cf},
                        {"driving_score", a.report.driving_score},
                        {"route_completion", a.report.route_completion_mean},
                        {"infraction_score", a.report.infraction_score_mean},
                        {"infraction_rates", rates}});
  }
  Json timings = Json::object();
  for (const auto& [stage, s] : report.timings) timings[stage] = s;
  const AugmentStats& st = report.augment_stats;
  return Json{{"seed", report.seed},
              {"arms", arms},
              {"tree_agreement", report.tree_agreement},
              {"augment",
               {{"seeds_tried", st.seeds_tried},
                {"searches", st.searches},
                {"search_failures", st.search_failures},
                {"cfs_found", st.cfs_found},
                {"implausible", st.implausible},
                {"realized", st.realized},
                {"expert_agreement", st.expert_agreement_rate()},
                {"cf_fraction", st.cf_fraction}}},
              {"timings_s", timings}};
}

}  // namespace cfdrive
