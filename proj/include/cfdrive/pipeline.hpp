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

#include "cfdrive/ablation.hpp"

namespace cfdrive {

/// Everything a pipeline stage reads from a config file.
struct PipelineConfig {
  std::uint64_t seed = 0;
  int workers = 1;
  int max_steps = 2000;
  TemplateMix train_mix = TemplateMix::uniform(kAllTemplates);
  int train_episodes = 30;
  /// Fraction of episodes (by episode identity) distill keeps for agreement.
  double holdout_fraction = 0.2;
  int holdout_episodes = 12;
  std::vector<ScenarioTemplate> eval_templates{kAllTemplates.begin(), kAllTemplates.end()};
  int eval_routes_per_template = 20;
  std::vector<std::uint64_t> ablation_seeds{0, 1, 2, 3, 4};
  TreeHyper tree;
  AugmentConfig augment;
  TrainConfig train;
  PenaltyTable penalties;
  SimConfig sim;

  /// Ablation settings for one seed.
  AblationConfig ablation(std::uint64_t seed) const;
};

/// Parses an INI file. Unknown sections or keys are rejected.
/// Throws Error(kIo) if unreadable and Error(kParse) on bad values.
PipelineConfig load_config(const std::string& path);
PipelineConfig parse_config(const std::string& text);
Json config_to_json(const PipelineConfig& cfg);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::string& path);

/// Writes through a temporary file and a rename so readers never see a
/// partial file.
void write_file_atomic(const std::string& path, std::string_view contents);
std::string read_file(const std::string& path);

/// Run record for one stage: inputs and outputs with digests, config echo,
/// seeds, timings and stage-specific counts.
class Manifest {
 public:
  Manifest(std::string stage, const PipelineConfig& cfg);

  void add_input(const std::string& role, const std::string& path);
  void add_output(const std::string& role, const std::string& path);
  void set(const std::string& key, Json value);
  void timing(const std::string& step, double seconds);
  const Json& json() const { return doc_; }
  void write(const std::string& path) const;

 private:
  Json doc_;
};

std::string manifest_path_for(const std::string& artifact_path);

/// Re-hashes every referenced file. Returns the roles that are missing or
/// whose digest changed; empty means the manifest is intact.
std::vector<std::string> verify_manifest(const std::string& manifest_path);

struct StageOutcome {
  Json manifest;
  /// Set when the stage finished with a partial result (exit code 3).
  bool warning = false;
  std::string message;
};

/// Expert demonstrations for cfg.train_episodes episodes.
StageOutcome stage_collect(const PipelineConfig& cfg, const std::string& out_path);
/// Fits the tree on the training episodes of a dataset and reports
/// agreement on the held-out episodes.
StageOutcome stage_distill(const PipelineConfig& cfg, const std::string& dataset_path, const std::string& out_path);
StageOutcome stage_augment(const PipelineConfig& cfg, const std::string& dataset_path,
                           const std::string& model_path, const std::string& out_path);
/// Writes the model and out_path + ".loss.csv".
StageOutcome stage_train(const PipelineConfig& cfg, const std::string& dataset_path, const std::string& out_path);
/// `policy` is "expert" or a learner model path. Writes out_prefix + ".json"
/// and out_prefix + ".csv".
StageOutcome stage_evaluate(const PipelineConfig& cfg, const std::string& policy, const std::string& out_prefix);
/// One ablation per configured seed. Writes out_prefix + ".json" and
/// out_prefix + ".csv" (one Table-2 block per seed plus a mean block).
StageOutcome stage_ablate(const PipelineConfig& cfg, const std::string& out_prefix);

struct AblationSummary {
  int seeds = 0;
  double mean_cf = 0.0;
  double mean_matched = 0.0;
  double mean_original_n = 0.0;
  double mean_expert = 0.0;
  double min_expert = 0.0;
  double max_learner = 0.0;
  int positive_gaps = 0;
  std::vector<double> gaps;  // cf_augmented minus original_matched, per seed
};

AblationSummary summarize_ablation(const Json& ablation_doc);
/// Text summary of an ablation JSON file.
std::string stage_report(const std::string& ablation_json_path);

}  // namespace cfdrive
