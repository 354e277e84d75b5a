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

#include <cstdint>
#include <string>
#include <vector>

#include "cfdrive/augment.hpp"
#include "cfdrive/eval.hpp"
#include "cfdrive/learner.hpp"
#include "cfdrive/trees.hpp"

namespace cfdrive {

/// Seed namespaces keep training, held-out evaluation and distillation
/// checks on disjoint scenario seeds.
inline constexpr std::uint64_t kEvalSeedOffset = 10000;
inline constexpr std::uint64_t kHoldoutSeedOffset = 20000;
inline constexpr std::uint64_t kExtraSeedOffset = 30000;

struct AblationConfig {
  TemplateMix train_mix;
  std::vector<ScenarioTemplate> eval_templates{kAllTemplates.begin(), kAllTemplates.end()};
  int train_episodes = 40;
  int holdout_episodes = 12;
  int eval_routes_per_template = 5;
  int max_steps = 2000;
  std::uint64_t seed = 0;
  TreeHyper tree;
  AugmentConfig augment;
  TrainConfig train;
  PenaltyTable penalties;
  int workers = 1;
};

struct ArmResult {
  std::string name;
  int n_original = 0;
  int n_cf = 0;
  EvalReport report;
};

struct AblationReport {
  std::uint64_t seed = 0;
  std::vector<ArmResult> arms;  // original_n, original_matched, cf_augmented, expert
  double tree_agreement = 0.0;
  AugmentStats augment_stats;
  std::vector<std::pair<std::string, double>> timings;  // seconds per stage

  const ArmResult& arm(const std::string& name) const;
};

std::vector<EvalCase> evaluation_cases(std::span<const ScenarioTemplate> templates, int routes_per_template,
                                       std::uint64_t seed);

/// Trains and evaluates three learner arms on identical held-out routes:
/// n originals; n + n_cf originals; n originals + n_cf counterfactuals; plus
/// the expert as the ceiling row.
AblationReport run_ablation(const AblationConfig& cfg, const SimConfig& sim);

std::string ablation_csv(const AblationReport& report);
Json ablation_to_json(const AblationReport& report);

}  // namespace cfdrive
