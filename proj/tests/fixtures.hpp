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

#include <cmath>
#include <memory>
#include <vector>

#include "cfdrive/cf.hpp"
#include "cfdrive/rng.hpp"
#include "cfdrive/trees.hpp"
#include "cfdrive/world.hpp"

namespace cfdrive::testing {

/// Ego at the origin heading +x on a straight 200 m route along the x axis.
inline WorldState straight_world(double speed = 0.0, double length = 200.0) {
  WorldState w;
  w.route = std::make_shared<const Route>(std::vector<Waypoint>{{0.0, 0.0}, {length, 0.0}});
  w.route_length = length;
  w.ego.position = {0.0, 0.0};
  w.ego.heading = 0.0;
  w.ego.speed = speed;
  return w;
}

inline Actor make_actor(int id, ActorKind kind, Vec2 position, double heading = 0.0, double speed = 0.0) {
  Actor a;
  a.id = id;
  a.kind = kind;
  a.position = position;
  a.heading = heading;
  a.speed = speed;
  return a;
}

inline TrafficLight make_light(int id, Vec2 stop_line, LightPhase phase) {
  TrafficLight l;
  l.id = id;
  l.stop_line = stop_line;
  l.phase = phase;
  return l;
}

inline RegressionTree leaf_tree(double v) {
  RegressionTree t;
  t.nodes.resize(1);
  t.nodes[0].value = v;
  return t;
}

/// One tree per class; a single split on `feature` sends x < threshold to
/// `left_class` and the rest to `right_class`.
inline TreeModel stump_model(int n_features, int feature, double threshold, int left_class, int right_class) {
  std::vector<RegressionTree> trees;
  for (int k = 0; k < kNumClasses; ++k) {
    RegressionTree t;
    t.nodes.resize(3);
    t.nodes[0].feature = feature;
    t.nodes[0].threshold = threshold;
    t.nodes[0].left = 1;
    t.nodes[0].right = 2;
    t.nodes[1].value = left_class == k ? 5.0 : 0.0;
    t.nodes[2].value = right_class == k ? 5.0 : 0.0;
    trees.push_back(t);
  }
  return TreeModel(TreeHyper{}, n_features, trees);
}

/// Axis-aligned tree of depth <= 2 over features in [0, 1].
struct OracleTree {
  int f0 = 0;
  double t0 = 0.5;
  int f1[2] = {0, 0};
  double t1[2] = {0.5, 0.5};
  int depth[2] = {0, 0};  // 1 if that side splits again
  int cls[4] = {0, 0, 0, 0};

  int classify(const double* x) const {
    const int side = x[f0] < t0 ? 0 : 1;
    if (!depth[side]) return cls[side * 2];
    return cls[side * 2 + (x[f1[side]] < t1[side] ? 0 : 1)];
  }

  /// Leaf score 5 for the owning class and 0 otherwise.
  TreeModel model(int n_features) const {
    std::vector<RegressionTree> trees;
    for (int k = 0; k < kNumClasses; ++k) {
      RegressionTree rt;
      rt.nodes.resize(1);
      rt.nodes[0].feature = f0;
      rt.nodes[0].threshold = t0;
      for (int side = 0; side < 2; ++side) {
        const int idx = static_cast<int>(rt.nodes.size());
        rt.nodes.emplace_back();
        (side == 0 ? rt.nodes[0].left : rt.nodes[0].right) = idx;
        if (!depth[side]) {
          rt.nodes[static_cast<std::size_t>(idx)].value = cls[side * 2] == k ? 5.0 : 0.0;
          continue;
        }
        const int l = static_cast<int>(rt.nodes.size());
        rt.nodes.emplace_back();
        rt.nodes.emplace_back();
        TreeNode& inner = rt.nodes[static_cast<std::size_t>(idx)];
        inner.feature = f1[side];
        inner.threshold = t1[side];
        inner.left = l;
        inner.right = l + 1;
        rt.nodes[static_cast<std::size_t>(l)].value = cls[side * 2] == k ? 5.0 : 0.0;
        rt.nodes[static_cast<std::size_t>(l) + 1].value = cls[side * 2 + 1] == k ? 5.0 : 0.0;
      }
      trees.push_back(rt);
    }
    return TreeModel(TreeHyper{}, n_features, trees);
  }
};

struct OracleCase {
  OracleTree tree;
  int free_features = 1;  // features [0, free) are free, the rest frozen at 0.5
  std::vector<double> o;
  int target = 0;
};

/// Calls f(x) for every point of the 0.01-step grid over the free features.
template <typename F>
void for_each_grid_point(int free_features, F&& f) {
  double x[3] = {0.5, 0.5, 0.5};
  const int n = 101;
  for (int a = 0; a < n; ++a) {
    x[0] = a * 0.01;
    for (int b = 0; b < (free_features > 1 ? n : 1); ++b) {
      if (free_features > 1) x[1] = b * 0.01;
      for (int c = 0; c < (free_features > 2 ? n : 1); ++c) {
        if (free_features > 2) x[2] = c * 0.01;
        f(x);
      }
    }
  }
}

/// Random depth <= 2 tree over 1..3 free features, resampled until the grid
/// contains a point of a class other than o's.
inline OracleCase oracle_case(int index) {
  Rng r(derive_seed(77, static_cast<std::uint64_t>(index)));
  OracleCase c;
  c.free_features = 1 + index % 3;
  const int k = c.free_features;
  for (;;) {
    OracleTree& t = c.tree;
    t.f0 = static_cast<int>(r.index(static_cast<std::size_t>(k)));
    t.t0 = r.uniform(0.05, 0.95);
    for (int s = 0; s < 2; ++s) {
      t.depth[s] = k > 1 ? r.uniform() < 0.8 : r.uniform() < 0.5;
      t.f1[s] = static_cast<int>(r.index(static_cast<std::size_t>(k)));
      t.t1[s] = r.uniform(0.05, 0.95);
    }
    for (int& cl : t.cls) cl = static_cast<int>(r.index(3));
    c.o.assign(3, 0.5);
    for (int i = 0; i < k; ++i) c.o[static_cast<std::size_t>(i)] = r.uniform();
    const int oc = t.classify(c.o.data());
    std::vector<int> options;
    for (int s = 0; s < 2; ++s)
      for (int q = 0; q < (t.depth[s] ? 2 : 1); ++q)
        if (t.cls[s * 2 + q] != oc) options.push_back(t.cls[s * 2 + q]);
    if (options.empty()) continue;
    c.target = options[r.index(options.size())];
    bool reachable = false;
    for_each_grid_point(k, [&](const double* x) { reachable = reachable || t.classify(x) == c.target; });
    if (reachable) return c;
  }
}

/// Smallest Euclidean distance from o to a grid point of the target class.
inline double oracle_distance(const OracleCase& c) {
  double best = INFINITY;
  for_each_grid_point(c.free_features, [&](const double* x) {
    if (c.tree.classify(x) != c.target) return;
    double d = 0.0;
    for (int i = 0; i < c.free_features; ++i) d += (x[i] - c.o[static_cast<std::size_t>(i)]) * (x[i] - c.o[static_cast<std::size_t>(i)]);
    best = std::min(best, d);
  });
  return std::sqrt(best);
}

inline CFConfig oracle_config(const OracleCase& c) {
  CFConfig cfg;
  for (int i = c.free_features; i < 3; ++i) cfg.frozen_features.push_back(i);
  cfg.feasible_ranges.assign(3, FeatureRange{0.0, 1.0});
  return cfg;
}

/// STOP inside either box, GO elsewhere:
/// A = {x0 >= 0.7, x1 < 0.5} and B = {x1 >= 0.7, x0 < 0.5}.
inline TreeModel two_region_model() {
  const auto box = [](int fa, double ta, int fb, double tb, double v) {
    RegressionTree t;
    t.nodes.resize(5);
    t.nodes[0] = {fa, ta, 1, 2, 0.0};
    t.nodes[1].value = 0.0;
    t.nodes[2] = {fb, tb, 3, 4, 0.0};
    t.nodes[3].value = v;
    t.nodes[4].value = 0.0;
    return t;
  };
  std::vector<RegressionTree> trees{leaf_tree(2.5), leaf_tree(0.0), box(0, 0.7, 1, 0.5, 5.0),
                                    leaf_tree(0.0), leaf_tree(0.0), box(1, 0.7, 0, 0.5, 5.0)};
  return TreeModel(TreeHyper{}, 2, trees);
}

inline bool in_region_a(const std::vector<double>& x) { return x[0] >= 0.7 && x[1] < 0.5; }
inline bool in_region_b(const std::vector<double>& x) { return x[1] >= 0.7 && x[0] < 0.5; }

}  // namespace cfdrive::testing
