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

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

#include "cfdrive/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUser = 1;
constexpr int kExitInternal = 2;
constexpr int kExitWarning = 3;

bool is_user_error(cfdrive::ErrorCode c) {
  using cfdrive::ErrorCode;
  switch (c) {
    case ErrorCode::kIo:
    case ErrorCode::kParse:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kUnknownTemplate:
    case ErrorCode::kEmptyDataset:
    case ErrorCode::kUnfittedModel:
    case ErrorCode::kShapeMismatch:
    case ErrorCode::kInvalidTarget:
      return true;
    default:
      return false;
  }
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "INI config file")->required();
  cmd->add_option("--seed", c.seed, "Override run.seed");
  cmd->add_option("-j,--workers", c.workers, "Worker threads for episodes and CF search");
}

cfdrive::PipelineConfig load(const Common& c) {
  cfdrive::PipelineConfig cfg = cfdrive::load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.workers) {
    if (*c.workers < 1) throw cfdrive::Error(cfdrive::ErrorCode::kInvalidArgument, "--workers must be >= 1");
    cfg.workers = *c.workers;
  }
  return cfg;
}

int finish(const std::string& stage, const cfdrive::StageOutcome& out) {
  if (out.warning) {
    std::cerr << "cfdrive " << stage << ": warning: " << out.message << '\n';
    return kExitWarning;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Counterfactual data augmentation pipeline for imitation-learned driving"};
  app.require_subcommand(1);

  Common common;
  std::string out, dataset, model, policy = "expert", input;

  auto* collect = app.add_subcommand("collect", "Roll out the expert and record demonstrations");
  add_common(collect, common);
  collect->add_option("-o,--out", out, "Output dataset (JSON lines)")->required();

  auto* distill = app.add_subcommand("distill", "Fit the boosted-tree student on a dataset");
  add_common(distill, common);
  distill->add_option("-d,--dataset", dataset, "Input dataset (JSON lines)")->required();
  distill->add_option("-o,--out", out, "Output tree model (JSON)")->required();

  auto* aug = app.add_subcommand("augment", "Add realized counterfactual records to a dataset");
  add_common(aug, common);
  aug->add_option("-d,--dataset", dataset, "Input dataset (JSON lines)")->required();
  aug->add_option("-m,--model", model, "Tree model from distill")->required();
  aug->add_option("-o,--out", out, "Output dataset (JSON lines)")->required();

  auto* trn = app.add_subcommand("train", "Train the imitation learner");
  add_common(trn, common);
  trn->add_option("-d,--dataset", dataset, "Input dataset (JSON lines)")->required();
  trn->add_option("-o,--out", out, "Output learner model (JSON)")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Closed-loop evaluation on held-out routes");
  add_common(evaluate, common);
  evaluate->add_option("-p,--policy", policy, "'expert' or a learner model path");
  evaluate->add_option("-o,--out", out, "Output prefix for .json and .csv")->required();

  auto* ablate = app.add_subcommand("ablate", "Three-arm ablation plus expert row for each configured seed");
  add_common(ablate, common);
  ablate->add_option("-o,--out", out, "Output prefix for .json and .csv")->required();

  auto* report = app.add_subcommand("report", "Summarize an ablation JSON file");
  report->add_option("input", input, "Ablation JSON from 'ablate'")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUser;
  }

  std::string stage = app.get_subcommands().front()->get_name();
  try {
    if (report->parsed()) {
      std::cout << cfdrive::stage_report(input);
      return kExitOk;
    }
    const cfdrive::PipelineConfig cfg = load(common);
    cfdrive::StageOutcome result;
    if (collect->parsed()) result = cfdrive::stage_collect(cfg, out);
    if (distill->parsed()) result = cfdrive::stage_distill(cfg, dataset, out);
    if (aug->parsed()) result = cfdrive::stage_augment(cfg, dataset, model, out);
    if (trn->parsed()) result = cfdrive::stage_train(cfg, dataset, out);
    if (evaluate->parsed()) result = cfdrive::stage_evaluate(cfg, policy, out);
    if (ablate->parsed()) {
      result = cfdrive::stage_ablate(cfg, out);
      std::cout << cfdrive::stage_report(out + ".json");
    }
    return finish(stage, result);
  } catch (const cfdrive::Error& e) {
    std::cerr << "cfdrive " << stage << ": " << e.what() << '\n';
    return is_user_error(e.code()) ? kExitUser : kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "cfdrive " << stage << ": internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}
