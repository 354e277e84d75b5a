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

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "cfdrive/trees.hpp"
#include "fixtures.hpp"

using namespace cfdrive;

namespace {

/// STOP iff slot-0 rel_x < 10, GO otherwise, over 200 random observations.
std::vector<LabeledObs> separable_dataset(std::uint64_t seed) {
  Rng r(seed);
  std::vector<LabeledObs> out;
  for (int i = 0; i < 200; ++i) {
    LabeledObs d;
    FilteredObs o;
    for (int s = 0; s < kSlots; ++s) set_sentinel(o, s);
    o.features[kEgoSpeedIndex] = r.uniform(0.0, 8.0);
    o.at(0, SlotField::kRelX) = r.uniform(0.0, 30.0);
    o.at(0, SlotField::kRelY) = r.uniform(-2.0, 2.0);
    o.at(0, SlotField::kKind) = static_cast<double>(KindCode::kVehicle);
    d.features = o.features;
    d.label = o.at(0, SlotField::kRelX) < 10.0 ? ActionClass::kStop : ActionClass::kGo;
    out.push_back(d);
  }
  return out;
}

struct XorPoint {
  double x[2];
  int label;
};

/// Best training accuracy over every axis-aligned tree of depth <= 2, with
/// thresholds at midpoints between distinct coordinates.
double best_depth2_accuracy(const std::vector<XorPoint>& pts) {
  std::vector<std::vector<double>> cuts(2);
  for (int f = 0; f < 2; ++f) {
    std::set<double> v;
    for (const auto& p : pts) v.insert(p.x[f]);
    std::vector<double> s(v.begin(), v.end());
    for (std::size_t i = 0; i + 1 < s.size(); ++i) cuts[f].push_back(0.5 * (s[i] + s[i + 1]));
  }
  const auto majority_hits = [](const std::vector<int>& labels) {
    int c[kNumClasses] = {0, 0, 0};
    for (int l : labels) ++c[l];
    return *std::max_element(c, c + kNumClasses);
  };
  // Best hits for a subset using a single optional split.
  const auto best_leaf_or_split = [&](const std::vector<const XorPoint*>& sub) {
    std::vector<int> all;
    for (const auto* p : sub) all.push_back(p->label);
    int best = majority_hits(all);
    for (int f = 0; f < 2; ++f)
      for (double t : cuts[f]) {
        std::vector<int> l, r;
        for (const auto* p : sub) (p->x[f] < t ? l : r).push_back(p->label);
        best = std::max(best, majority_hits(l) + majority_hits(r));
      }
    return best;
  };
  std::vector<const XorPoint*> all;
  for (const auto& p : pts) all.push_back(&p);
  int best = best_leaf_or_split(all);
  for (int f = 0; f < 2; ++f)
    for (double t : cuts[f]) {
      std::vector<const XorPoint*> l, r;
      for (const auto* p : all) (p->x[f] < t ? l : r).push_back(p);
      best = std::max(best, best_leaf_or_split(l) + best_leaf_or_split(r));
    }
  return static_cast<double>(best) / static_cast<double>(pts.size());
}

}  // namespace

TEST_CASE("separable data is fit perfectly and STOP is confident deep inside") {
  const auto data = separable_dataset(5);
  const TreeModel m = fit(data, TreeHyper{});
  CHECK(agreement(m, data) == 1.0);

  FilteredObs deep;
  for (int s = 0; s < kSlots; ++s) set_sentinel(deep, s);
  deep.at(0, SlotField::kRelX) = 2.0;
  deep.at(0, SlotField::kKind) = static_cast<double>(KindCode::kVehicle);
  CHECK(predict_proba(m, deep.features)[static_cast<int>(ActionClass::kStop)] > 0.9);
}

TEST_CASE("a single sample predicts its own label") {
  LabeledObs d;
  d.features.fill(1.0);
  d.label = ActionClass::kSlow;
  const std::vector<LabeledObs> data{d};
  const TreeModel m = fit(data, TreeHyper{});
  CHECK(predict_class(m, d.features) == ActionClass::kSlow);
}

TEST_CASE("XOR pattern at depth 2 matches the exhaustive split oracle") {
  Rng r(21);
  std::vector<XorPoint> pts;
  std::vector<double> x;
  std::vector<int> y;
  for (int i = 0; i < 100; ++i) {
    XorPoint p{{r.uniform(), r.uniform()}, 0};
    p.label = (p.x[0] < 0.5) != (p.x[1] < 0.5) ? 2 : 0;
    pts.push_back(p);
    x.insert(x.end(), {p.x[0], p.x[1]});
    y.push_back(p.label);
  }
  TreeHyper h;
  h.max_depth = 2;
  h.min_leaf = 1;
  const TreeModel m = fit(x, 2, y, h);
  int hits = 0;
  for (const auto& p : pts) hits += static_cast<int>(predict_class(m, std::span<const double>(p.x, 2))) == p.label;
  const double oracle = best_depth2_accuracy(pts);
  CHECK(oracle == 1.0);
  CHECK(static_cast<double>(hits) / 100.0 == oracle);
}

TEST_CASE("probabilities sum to one") {
  const TreeModel m = fit(separable_dataset(6), TreeHyper{});
  Rng r(3);
  for (int i = 0; i < 100; ++i) {
    FeatureVector f;
    for (double& v : f) v = r.uniform(-50.0, 50.0);
    const ClassProbs p = predict_proba(m, f);
    CHECK(std::abs(p[0] + p[1] + p[2] - 1.0) < 1e-9);
  }
}

TEST_CASE("perturbing an unused padded slot leaves probabilities unchanged") {
  const auto data = separable_dataset(7);
  const TreeModel m = fit(data, TreeHyper{});
  const auto used = m.used_features();
  const int padded = feature_index(3, SlotField::kRelX);
  REQUIRE(std::find(used.begin(), used.end(), padded) == used.end());
  FeatureVector f = data[0].features;
  const ClassProbs base = predict_proba(m, f);
  for (double d : {-1.0, 1.0}) {
    FeatureVector g = f;
    g[padded] += d;
    CHECK(predict_proba(m, g) == base);
  }
}

TEST_CASE("argmax picks the largest and breaks ties toward GO") {
  CHECK(argmax_class({0.1, 0.2, 0.7}) == ActionClass::kStop);
  CHECK(argmax_class({0.5, 0.5, 0.0}) == ActionClass::kGo);
}

TEST_CASE("unfitted and empty inputs are rejected") {
  const TreeModel empty;
  FeatureVector f{};
  CHECK_THROWS_AS(predict_proba(empty, f), Error);
  CHECK_THROWS_AS(fit(std::span<const LabeledObs>{}, TreeHyper{}), Error);
}

TEST_CASE("fit is deterministic and round-trips through JSON") {
  const auto data = separable_dataset(8);
  const TreeModel a = fit(data, TreeHyper{});
  const TreeModel b = fit(data, TreeHyper{});
  CHECK(a == b);
  CHECK(TreeModel::from_json(a.to_json()) == a);
  CHECK(a.to_json().dump() == b.to_json().dump());
}

TEST_CASE("split gain is zero for an uninformative split") {
  CHECK(split_gain(1.0, 2.0, 1.0, 2.0, 0.0) == doctest::Approx(0.0));
  CHECK(split_gain(2.0, 2.0, -2.0, 2.0, 0.0) > 0.0);
}

TEST_CASE("training loss decreases across rounds") {
  const TreeModel m = fit(separable_dataset(9), TreeHyper{});
  const auto& loss = m.training_loss();
  REQUIRE(loss.size() == 100);
  CHECK(loss.back() < loss.front());
}
