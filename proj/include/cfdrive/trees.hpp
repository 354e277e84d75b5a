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
#include <span>
#include <string>
#include <vector>

#include "cfdrive/action.hpp"
#include "cfdrive/json_io.hpp"
#include "cfdrive/observation.hpp"

namespace cfdrive {

struct TreeHyper {
  int n_rounds = 100;
  int max_depth = 4;
  double learning_rate = 0.1;
  int min_leaf = 5;
  double l2 = 1.0;
};

/// Internal node iff feature >= 0; samples with x[feature] < threshold go left.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double eval(std::span<const double> x) const {
    int i = 0;
    while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
      const TreeNode& n = nodes[static_cast<std::size_t>(i)];
      i = x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)].value;
  }
  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;
};

using ClassProbs = std::array<double, kNumClasses>;

struct LabeledObs {
  FeatureVector features{};
  ActionClass label = ActionClass::kGo;
};

/// Softmax gradient-boosted classifier: one regression tree per class per
/// round, stored round-major.
class TreeModel {
 public:
  TreeModel() = default;
  TreeModel(TreeHyper hyper, int n_features, std::vector<RegressionTree> trees);

  bool fitted() const { return !trees_.empty(); }
  int n_features() const { return n_features_; }
  int n_rounds() const { return static_cast<int>(trees_.size()) / kNumClasses; }
  const TreeHyper& hyper() const { return hyper_; }
  const std::vector<RegressionTree>& trees() const { return trees_; }

  /// Mean training cross-entropy after each round (empty when not trained here).
  const std::vector<double>& training_loss() const { return training_loss_; }
  void set_training_loss(std::vector<double> loss) { training_loss_ = std::move(loss); }

  std::array<double, kNumClasses> raw_scores(std::span<const double> x) const;

  /// Features split on by at least one internal node.
  std::vector<int> used_features() const;

  Json to_json() const;
  static TreeModel from_json(const Json& j);

  friend bool operator==(const TreeModel& a, const TreeModel& b) {
    return a.n_features_ == b.n_features_ && a.trees_ == b.trees_;
  }

 private:
  struct FlatNode {
    int feature;  // -1 for leaves
    int left;     // absolute index; right child is left + 1
    double threshold_or_value;
  };
  void flatten();

  TreeHyper hyper_;
  int n_features_ = 0;
  std::vector<RegressionTree> trees_;
  std::vector<double> training_loss_;
  /// All trees in one contiguous array for prediction.
  std::vector<FlatNode> flat_;
  std::vector<int> roots_;
};

/// Row-major design matrix of n_samples x n_features. Throws
/// Error(kEmptyDataset) when there are no samples.
TreeModel fit(std::span<const double> x, int n_features, std::span<const int> labels, const TreeHyper& hyper);
TreeModel fit(std::span<const LabeledObs> data, const TreeHyper& hyper);

/// Softmax over summed class scores. Throws Error(kUnfittedModel).
ClassProbs predict_proba(const TreeModel& model, std::span<const double> x);
/// Argmax with ties broken toward the lower class index.
ActionClass predict_class(const TreeModel& model, std::span<const double> x);
ActionClass argmax_class(const ClassProbs& p);

/// Gain of splitting (G, H) into left/right parts with L2 regularisation.
double split_gain(double g_left, double h_left, double g_right, double h_right, double l2);

/// Fraction of samples whose predicted class equals the label.
double agreement(const TreeModel& model, std::span<const LabeledObs> data);

}  // namespace cfdrive
