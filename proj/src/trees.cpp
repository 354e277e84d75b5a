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

#include "cfdrive/trees.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace cfdrive {

namespace {

constexpr int kModelVersion = 1;
constexpr double kMinHessian = 1e-16;
constexpr double kMinGain = 1e-12;

ClassProbs softmax(const std::array<double, kNumClasses>& s) {
  const double m = *std::max_element(s.begin(), s.end());
  ClassProbs p{};
  double z = 0.0;
  for (int k = 0; k < kNumClasses; ++k) {
    p[k] = std::exp(s[k] - m);
    z += p[k];
  }
  for (double& v : p) v /= z;
  return p;
}

struct SplitCandidate {
  double gain = kMinGain;
  int feature = -1;
  double threshold = 0.0;
};

/// Level-wise exact greedy tree growth over presorted feature orders.
class TreeGrower {
 public:
  TreeGrower(std::span<const double> x, int n_features, const std::vector<std::vector<int>>& order,
             const TreeHyper& hyper)
      : x_(x), n_features_(n_features), order_(order), hyper_(hyper) {}

  RegressionTree grow(std::span<const double> grad, std::span<const double> hess) {
    const std::size_t n = grad.size();
    RegressionTree tree;
    tree.nodes.emplace_back();
    std::vector<int> node_of(n, 0);
    std::vector<int> active{0};

    for (int depth = 0; depth < hyper_.max_depth && !active.empty(); ++depth) {
      const std::size_t n_nodes = tree.nodes.size();
      std::vector<double> g_tot(n_nodes, 0.0), h_tot(n_nodes, 0.0);
      std::vector<int> c_tot(n_nodes, 0);
      std::vector<char> is_active(n_nodes, 0);
      for (int a : active) is_active[static_cast<std::size_t>(a)] = 1;
      for (std::size_t i = 0; i < n; ++i) {
        const auto nd = static_cast<std::size_t>(node_of[i]);
        if (!is_active[nd]) continue;
        g_tot[nd] += grad[i];
        h_tot[nd] += hess[i];
        ++c_tot[nd];
      }

      std::vector<SplitCandidate> best(n_nodes);
      std::vector<double> g_left(n_nodes), h_left(n_nodes), last(n_nodes);
      std::vector<int> c_left(n_nodes);
      for (int f = 0; f < n_features_; ++f) {
        std::fill(g_left.begin(), g_left.end(), 0.0);
        std::fill(h_left.begin(), h_left.end(), 0.0);
        std::fill(c_left.begin(), c_left.end(), 0);
        for (int idx : order_[static_cast<std::size_t>(f)]) {
          const auto i = static_cast<std::size_t>(idx);
          const auto nd = static_cast<std::size_t>(node_of[i]);
          if (!is_active[nd]) continue;
          const double v = x_[i * static_cast<std::size_t>(n_features_) + static_cast<std::size_t>(f)];
          if (c_left[nd] >= hyper_.min_leaf && v > last[nd] && c_tot[nd] - c_left[nd] >= hyper_.min_leaf) {
            const double gain = split_gain(g_left[nd], h_left[nd], g_tot[nd] - g_left[nd],
                                           h_tot[nd] - h_left[nd], hyper_.l2);
            if (gain > best[nd].gain) best[nd] = {gain, f, v};
          }
          g_left[nd] += grad[i];
          h_left[nd] += hess[i];
          ++c_left[nd];
          last[nd] = v;
        }
      }

      std::vector<int> next_active;
      for (int a : active) {
        const auto nd = static_cast<std::size_t>(a);
        if (best[nd].feature < 0) continue;
        const int left = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        TreeNode& node = tree.nodes[nd];
        node.feature = best[nd].feature;
        node.threshold = best[nd].threshold;
        node.left = left;
        node.right = left + 1;
        next_active.push_back(left);
        next_active.push_back(left + 1);
      }
      for (std::size_t i = 0; i < n; ++i) {
        const TreeNode& node = tree.nodes[static_cast<std::size_t>(node_of[i])];
        if (node.feature < 0) continue;
        const double v = x_[i * static_cast<std::size_t>(n_features_) + static_cast<std::size_t>(node.feature)];
        node_of[i] = v < node.threshold ? node.left : node.right;
      }
      active = std::move(next_active);
    }

    std::vector<double> g_leaf(tree.nodes.size(), 0.0), h_leaf(tree.nodes.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      g_leaf[static_cast<std::size_t>(node_of[i])] += grad[i];
      h_leaf[static_cast<std::size_t>(node_of[i])] += hess[i];
    }
    for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
      if (tree.nodes[k].feature < 0) {
        tree.nodes[k].value = -hyper_.learning_rate * g_leaf[k] / (h_leaf[k] + hyper_.l2);
      }
    }
    return tree;
  }

 private:
  std::span<const double> x_;
  int n_features_;
  const std::vector<std::vector<int>>& order_;
  const TreeHyper& hyper_;
};

Json node_to_json(const RegressionTree& t, int i) {
  const TreeNode& n = t.nodes[static_cast<std::size_t>(i)];
  if (n.feature < 0) return Json{{"leaf", n.value}};
  return Json{{"feature", n.feature},
              {"threshold", n.threshold},
              {"left", node_to_json(t, n.left)},
              {"right", node_to_json(t, n.right)}};
}

int node_from_json(const Json& j, RegressionTree& t, int n_features) {
  const int idx = static_cast<int>(t.nodes.size());
  t.nodes.emplace_back();
  if (j.contains("leaf")) {
    const double v = j.at("leaf").get<double>();
    if (!std::isfinite(v)) throw Error(ErrorCode::kParse, "non-finite leaf value");
    t.nodes[static_cast<std::size_t>(idx)].value = v;
    return idx;
  }
  const int f = j.at("feature").get<int>();
  const double thr = j.at("threshold").get<double>();
  if (f < 0 || f >= n_features || !std::isfinite(thr)) throw Error(ErrorCode::kParse, "invalid split node");
  const int l = node_from_json(j.at("left"), t, n_features);
  const int r = node_from_json(j.at("right"), t, n_features);
  TreeNode& n = t.nodes[static_cast<std::size_t>(idx)];
  n.feature = f;
  n.threshold = thr;
  n.left = l;
  n.right = r;
  return idx;
}

}  // namespace

double split_gain(double g_left, double h_left, double g_right, double h_right, double l2) {
  const double g = g_left + g_right, h = h_left + h_right;
  return g_left * g_left / (h_left + l2) + g_right * g_right / (h_right + l2) - g * g / (h + l2);
}

TreeModel::TreeModel(TreeHyper hyper, int n_features, std::vector<RegressionTree> trees)
    : hyper_(hyper), n_features_(n_features), trees_(std::move(trees)) {
  if (trees_.size() % kNumClasses != 0)
    throw Error(ErrorCode::kInvalidArgument, "tree count must be a multiple of the class count");
  flatten();
}

void TreeModel::flatten() {
  flat_.clear();
  roots_.clear();
  for (const RegressionTree& t : trees_) {
    roots_.push_back(static_cast<int>(flat_.size()));
    // Breadth-first so that siblings are adjacent.
    std::vector<int> queue{0};
    const std::size_t base = flat_.size();
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const TreeNode& n = t.nodes[static_cast<std::size_t>(queue[q])];
      if (n.feature < 0) {
        flat_.push_back({-1, -1, n.value});
      } else {
        flat_.push_back({n.feature, static_cast<int>(base + queue.size()), n.threshold});
        queue.push_back(n.left);
        queue.push_back(n.right);
      }
    }
  }
}

std::array<double, kNumClasses> TreeModel::raw_scores(std::span<const double> x) const {
  std::array<double, kNumClasses> s{};
  const FlatNode* nodes = flat_.data();
  for (std::size_t t = 0; t < roots_.size(); ++t) {
    const FlatNode* n = nodes + roots_[t];
    while (n->feature >= 0) {
      n = nodes + n->left + (x[static_cast<std::size_t>(n->feature)] < n->threshold_or_value ? 0 : 1);
    }
    s[t % kNumClasses] += n->threshold_or_value;
  }
  return s;
}

std::vector<int> TreeModel::used_features() const {
  std::vector<int> used;
  for (const RegressionTree& t : trees_)
    for (const TreeNode& n : t.nodes)
      if (n.feature >= 0) used.push_back(n.feature);
  std::sort(used.begin(), used.end());
  used.erase(std::unique(used.begin(), used.end()), used.end());
  return used;
}

Json TreeModel::to_json() const {
  Json trees = Json::array();
  for (const RegressionTree& t : trees_) trees.push_back(node_to_json(t, 0));
  Json schema = Json::array();
  if (n_features_ == kFeatureCount) {
    for (const FeatureInfo& f : feature_schema()) {
      schema.push_back(Json{{"name", f.name}, {"index", f.index}, {"unit", f.unit}, {"frozen", f.frozen}});
    }
  }
  return Json{{"format", "cfdrive.tree_model"},
              {"version", kModelVersion},
              {"hyper",
               {{"n_rounds", hyper_.n_rounds},
                {"max_depth", hyper_.max_depth},
                {"learning_rate", hyper_.learning_rate},
                {"min_leaf", hyper_.min_leaf},
                {"l2", hyper_.l2}}},
              {"n_features", n_features_},
              {"n_classes", kNumClasses},
              {"schema", schema},
              {"training_loss", training_loss_},
              {"trees", trees}};
}

TreeModel TreeModel::from_json(const Json& j) {
  try {
    if (j.at("version").get<int>() != kModelVersion) throw Error(ErrorCode::kParse, "unsupported model version");
    if (j.at("n_classes").get<int>() != kNumClasses) throw Error(ErrorCode::kParse, "model must have 3 classes");
    TreeHyper h;
    const Json& hj = j.at("hyper");
    h.n_rounds = hj.at("n_rounds").get<int>();
    h.max_depth = hj.at("max_depth").get<int>();
    h.learning_rate = hj.at("learning_rate").get<double>();
    h.min_leaf = hj.at("min_leaf").get<int>();
    h.l2 = hj.at("l2").get<double>();
    const int nf = j.at("n_features").get<int>();
    std::vector<RegressionTree> trees;
    for (const Json& tj : j.at("trees")) {
      RegressionTree t;
      node_from_json(tj, t, nf);
      trees.push_back(std::move(t));
    }
    TreeModel m(h, nf, std::move(trees));
    m.training_loss_ = j.value("training_loss", std::vector<double>{});
    return m;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed tree model: ") + e.what());
  }
}

TreeModel fit(std::span<const double> x, int n_features, std::span<const int> labels, const TreeHyper& hyper) {
  const std::size_t n = labels.size();
  if (n == 0) throw Error(ErrorCode::kEmptyDataset, "cannot fit a tree model on an empty dataset");
  if (x.size() != n * static_cast<std::size_t>(n_features))
    throw Error(ErrorCode::kShapeMismatch, "design matrix does not match label count");
  const auto nf = static_cast<std::size_t>(n_features);

  std::vector<std::vector<int>> order(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    auto& o = order[f];
    o.resize(n);
    std::iota(o.begin(), o.end(), 0);
    std::stable_sort(o.begin(), o.end(), [&](int a, int b) {
      return x[static_cast<std::size_t>(a) * nf + f] < x[static_cast<std::size_t>(b) * nf + f];
    });
  }

  std::vector<std::array<double, kNumClasses>> scores(n, std::array<double, kNumClasses>{});
  std::vector<RegressionTree> trees;
  std::vector<double> loss_curve;
  std::vector<double> grad(n), hess(n);
  std::vector<ClassProbs> probs(n);
  TreeGrower grower(x, n_features, order, hyper);

  for (int round = 0; round < hyper.n_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) probs[i] = softmax(scores[i]);
    for (int k = 0; k < kNumClasses; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        const double p = probs[i][static_cast<std::size_t>(k)];
        grad[i] = p - (labels[i] == k ? 1.0 : 0.0);
        hess[i] = std::max(p * (1.0 - p), kMinHessian);
      }
      trees.push_back(grower.grow(grad, hess));
    }
    const std::size_t first = trees.size() - kNumClasses;
    double ce = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::span<const double> row = x.subspan(i * nf, nf);
      for (int k = 0; k < kNumClasses; ++k) scores[i][static_cast<std::size_t>(k)] += trees[first + static_cast<std::size_t>(k)].eval(row);
      ce -= std::log(std::max(softmax(scores[i])[static_cast<std::size_t>(labels[i])], 1e-300));
    }
    loss_curve.push_back(ce / static_cast<double>(n));
  }
  TreeModel model(hyper, n_features, std::move(trees));
  model.set_training_loss(std::move(loss_curve));
  return model;
}

TreeModel fit(std::span<const LabeledObs> data, const TreeHyper& hyper) {
  std::vector<double> x;
  std::vector<int> y;
  x.reserve(data.size() * kFeatureCount);
  y.reserve(data.size());
  for (const LabeledObs& d : data) {
    x.insert(x.end(), d.features.begin(), d.features.end());
    y.push_back(static_cast<int>(d.label));
  }
  return fit(x, kFeatureCount, y, hyper);
}

ClassProbs predict_proba(const TreeModel& model, std::span<const double> x) {
  if (!model.fitted()) throw Error(ErrorCode::kUnfittedModel, "tree model is not fitted");
  return softmax(model.raw_scores(x));
}

ActionClass argmax_class(const ClassProbs& p) {
  int best = 0;
  for (int k = 1; k < kNumClasses; ++k)
    if (p[static_cast<std::size_t>(k)] > p[static_cast<std::size_t>(best)]) best = k;
  return static_cast<ActionClass>(best);
}

ActionClass predict_class(const TreeModel& model, std::span<const double> x) {
  return argmax_class(predict_proba(model, x));
}

double agreement(const TreeModel& model, std::span<const LabeledObs> data) {
  if (data.empty()) return 0.0;
  std::size_t hits = 0;
  for (const LabeledObs& d : data) hits += predict_class(model, d.features) == d.label;
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace cfdrive
