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

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cfdrive/action.hpp"
#include "cfdrive/augment.hpp"
#include "cfdrive/config.hpp"
#include "cfdrive/eval.hpp"
#include "cfdrive/json_io.hpp"
#include "cfdrive/world.hpp"

namespace cfdrive {

inline constexpr int kWaypointOutputs = 2 * kHorizon;  // 20
inline constexpr int kOutputDim = kWaypointOutputs + kGridValues + kFlagCount;  // 73

/// Flattened sensor encoding: ego speed, 8 detections x (4 scaled values +
/// 5-way kind one-hot), 4-way light one-hot, route context points.
int input_dim(const SensorConfig& cfg);
Eigen::VectorXd encode_sensors(const SensorObs& x, const SimConfig& cfg);

struct TrainConfig {
  double lambda_pt = 0.4;
  double lambda_map = 0.4;
  double lambda_tf = 1.0;
  double learning_rate = 1e-3;
  int batch_size = 64;
  int epochs = 30;
  std::uint64_t seed = 0;
  std::vector<int> hidden{128, 128};
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  /// Probability clamp for the flag cross-entropy.
  double bce_clamp = 1e-7;
};

struct LossTerms {
  double total = 0.0;
  double l_pt = 0.0;
  double l_map = 0.0;
  double l_tf = 0.0;
};

struct EpochLoss {
  int epoch = 0;
  LossTerms terms;
};

struct Layer {
  Eigen::MatrixXd w;
  Eigen::VectorXd b;
};

/// Feed-forward network: tanh hidden layers, linear waypoint head, sigmoid
/// grid and flag heads.
class LearnerModel {
 public:
  LearnerModel() = default;
  LearnerModel(int input_dim, const TrainConfig& cfg);

  int input_dim() const { return layers_.empty() ? 0 : static_cast<int>(layers_.front().w.cols()); }
  bool trained() const { return !layers_.empty(); }
  const TrainConfig& config() const { return cfg_; }
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }
  const std::vector<EpochLoss>& loss_curve() const { return loss_curve_; }
  std::vector<EpochLoss>& loss_curve() { return loss_curve_; }

  /// Pre-activation outputs (kOutputDim x batch).
  Eigen::MatrixXd logits(const Eigen::MatrixXd& x) const;

  bool all_finite() const;
  std::size_t parameter_count() const;

  Json to_json() const;
  static LearnerModel from_json(const Json& j);
  friend bool operator==(const LearnerModel& a, const LearnerModel& b);

 private:
  TrainConfig cfg_;
  std::vector<Layer> layers_;
  std::vector<EpochLoss> loss_curve_;
};

/// Column-per-sample targets.
struct Targets {
  Eigen::MatrixXd waypoints;  // 20 x batch
  Eigen::MatrixXd grid;       // 50 x batch
  Eigen::MatrixXd flags;      // 3 x batch
};

struct Predictions {
  Eigen::MatrixXd waypoints;
  Eigen::MatrixXd grid;   // probabilities
  Eigen::MatrixXd flags;  // probabilities
};

Predictions predict(const LearnerModel& model, const Eigen::MatrixXd& x);

/// Composite loss averaged over the batch. Throws Error(kShapeMismatch).
LossTerms loss(const Predictions& prediction, const Targets& target, const TrainConfig& cfg);

struct Gradients {
  std::vector<Layer> layers;
};

/// Loss and its analytic gradient with respect to every parameter.
LossTerms loss_and_gradients(const LearnerModel& model, const Eigen::MatrixXd& x, const Targets& target,
                             Gradients& grads);

struct TrainingBatch {
  Eigen::MatrixXd x;
  Targets targets;
};

TrainingBatch make_batch(std::span<const DemoRecord> records, const SimConfig& sim);

/// Mini-batch Adam. Throws Error(kEmptyDataset) and Error(kDivergedLoss).
LearnerModel train(std::span<const DemoRecord> records, const TrainConfig& cfg, const SimConfig& sim);

/// Decodes the network output into an Action whose waypoint spacing is
/// projected to at most v_max * dt.
Action learner_act(const LearnerModel& model, const SensorObs& x, const SimConfig& sim);
Action decode_action(const Eigen::VectorXd& waypoints, double stop_probability, double ego_speed,
                     const SimConfig& sim);

class LearnerPolicy final : public Policy {
 public:
  LearnerPolicy(const LearnerModel& model, SimConfig sim, std::string name = "learner")
      : model_(model), sim_(std::move(sim)), name_(std::move(name)) {}
  std::string name() const override { return name_; }
  bool uses_sensors() const override { return true; }
  Action act(const WorldState& world, const SensorObs* sensors) override;

 private:
  const LearnerModel& model_;
  SimConfig sim_;
  std::string name_;
};

std::string loss_curve_csv(const LearnerModel& model);

struct GradCheckResult {
  double max_relative_error = 0.0;
  int checked = 0;
};

/// Central finite differences on a sample of parameters from every layer
/// (each output head included).
GradCheckResult gradient_check(const LearnerModel& model, const Eigen::MatrixXd& x, const Targets& target,
                               int samples_per_layer, std::uint64_t seed, double step = 1e-5);

}  // namespace cfdrive
