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

#include "cfdrive/cf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "cfdrive/rng.hpp"

namespace cfdrive {

namespace {

constexpr double kMinScale = 1e-6;
constexpr int kArchiveSize = 8;
constexpr int kPolishCandidates = 4;
constexpr int kPolishPasses = 4;
constexpr int kBisectSteps = 48;

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

double mad(const std::vector<double>& v) {
  if (v.empty()) return 1.0;
  const double m = median(v);
  std::vector<double> dev;
  dev.reserve(v.size());
  for (double x : v) dev.push_back(std::abs(x - m));
  return std::max(median(std::move(dev)), kMinScale);
}

struct Scored {
  std::vector<double> x;
  double p_target = 0.0;
  double distance = 0.0;
  double penalty = 0.0;
  bool valid = false;

  double base() const { return distance + penalty; }
  double loss(double lam) const { return lam * (p_target - 1.0) * (p_target - 1.0) + base(); }
};

/// One slot of the (possibly diverse) search.
class Search {
 public:
  Search(const TreeModel& model, std::span<const double> o, int target, const SearchSpace& space,
         const CFConfig& cfg, const std::vector<std::vector<double>>& previous, Rng& rng)
      : model_(model), o_(o), target_(target), space_(space), cfg_(cfg), previous_(previous), rng_(rng) {
    for (int i = 0; i < space_.size(); ++i)
      if (space_.free[static_cast<std::size_t>(i)]) free_.push_back(i);
    thresholds_.resize(static_cast<std::size_t>(space_.size()));
    for (const RegressionTree& t : model_.trees())
      for (const TreeNode& n : t.nodes)
        if (n.feature >= 0 && n.feature < space_.size() && space_.free[static_cast<std::size_t>(n.feature)])
          thresholds_[static_cast<std::size_t>(n.feature)].push_back(n.threshold);
    for (int i : free_) {
      auto& th = thresholds_[static_cast<std::size_t>(i)];
      std::sort(th.begin(), th.end());
      th.erase(std::unique(th.begin(), th.end()), th.end());
      if (!th.empty()) split_free_.push_back(i);
    }
  }

  std::optional<CFCandidate> run() {
    if (free_.empty()) return std::nullopt;
    const auto pop_size = static_cast<std::size_t>(std::max(cfg_.population, 4));
    const std::size_t n_elite = std::max<std::size_t>(2, pop_size / 4);
    std::vector<Scored> pop;
    pop.push_back(score(std::vector<double>(o_.begin(), o_.end())));
    while (pop.size() < pop_size) pop.push_back(score(initial_candidate()));

    int iters = 0;
    double final_lambda = cfg_.lambda_init;
    for (double lam = cfg_.lambda_init; lam <= cfg_.lambda_max && iters < cfg_.max_search_iters;
         lam *= cfg_.lambda_growth) {
      rank(pop, lam);
      for (int it = 0; it < cfg_.iters_per_lambda && iters < cfg_.max_search_iters; ++it, ++iters) {
        std::vector<Scored> next(pop.begin(), pop.begin() + static_cast<std::ptrdiff_t>(n_elite));
        while (next.size() < pop_size) {
          const Scored& a = pop[tournament(pop.size())];
          const Scored& b = pop[tournament(pop.size())];
          next.push_back(score(offspring(a.x, b.x)));
        }
        pop = std::move(next);
        rank(pop, lam);
      }
      if (pop.front().valid) return finish(pop.front(), lam);
      final_lambda = lam;
    }
    if (archive_.empty()) return std::nullopt;
    return finish(archive_.front(), final_lambda);
  }

 private:
  Scored score(std::vector<double> x) {
    Scored s;
    s.x = std::move(x);
    const ClassProbs p = predict_proba(model_, s.x);
    s.p_target = p[static_cast<std::size_t>(target_)];
    s.distance = standardized_distance(s.x, o_, space_.scales);
    double min_prev = std::numeric_limits<double>::infinity();
    for (const auto& prev : previous_) {
      const double d = standardized_distance(s.x, prev, space_.scales);
      s.penalty += cfg_.diversity_weight * std::exp(-d);
      min_prev = std::min(min_prev, d);
    }
    s.valid = static_cast<int>(argmax_class(p)) == target_ && min_prev >= cfg_.min_diverse_distance;
    if (s.valid) remember(s);
    return s;
  }

  void remember(const Scored& s) {
    for (const Scored& a : archive_)
      if (a.x == s.x) return;
    auto pos = std::upper_bound(archive_.begin(), archive_.end(), s.base(),
                                [](double v, const Scored& a) { return v < a.base(); });
    archive_.insert(pos, s);
    if (archive_.size() > kArchiveSize) archive_.pop_back();
  }

  static void rank(std::vector<Scored>& pop, double lam) {
    std::stable_sort(pop.begin(), pop.end(),
                     [lam](const Scored& a, const Scored& b) { return a.loss(lam) < b.loss(lam); });
  }

  std::size_t tournament(std::size_t n) {
    const std::size_t a = rng_.index(n), b = rng_.index(n);
    return std::min(a, b);
  }

  void project(std::vector<double>& x) const {
    for (int i = 0; i < space_.size(); ++i) {
      const auto u = static_cast<std::size_t>(i);
      if (!space_.free[u]) {
        x[u] = o_[u];
        continue;
      }
      if (space_.integer[u]) x[u] = std::round(x[u]);
      x[u] = std::clamp(x[u], space_.ranges[u].lo, space_.ranges[u].hi);
    }
  }

  double step(int i, double magnitude) {
    return rng_.normal() * magnitude * space_.scales[static_cast<std::size_t>(i)];
  }

  /// Moves one split feature to either side of one of its thresholds.
  void threshold_jump(std::vector<double>& x) {
    const int i = split_free_[rng_.index(split_free_.size())];
    const auto u = static_cast<std::size_t>(i);
    const auto& th = thresholds_[u];
    const double t = th[rng_.index(th.size())];
    x[u] = rng_.uniform() < 0.5 ? t : std::nextafter(t, -std::numeric_limits<double>::infinity());
  }

  std::vector<double> initial_candidate() {
    std::vector<double> x(o_.begin(), o_.end());
    if (!split_free_.empty() && rng_.uniform() < 0.3) {
      threshold_jump(x);
      project(x);
      return x;
    }
    const double magnitude = std::exp(rng_.uniform(std::log(0.2), std::log(5.0)));
    bool touched = false;
    for (int i : free_) {
      if (rng_.uniform() >= 0.5) continue;
      touched = true;
      const auto u = static_cast<std::size_t>(i);
      if (rng_.uniform() < 0.2) {
        x[u] = rng_.uniform(space_.ranges[u].lo, space_.ranges[u].hi);
      } else {
        x[u] += step(i, magnitude);
      }
    }
    if (!touched) {
      const int i = free_[rng_.index(free_.size())];
      x[static_cast<std::size_t>(i)] += step(i, magnitude);
    }
    project(x);
    return x;
  }

  std::vector<double> offspring(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> x = a;
    for (int i : free_)
      if (rng_.uniform() < 0.5) x[static_cast<std::size_t>(i)] = b[static_cast<std::size_t>(i)];
    const double r = rng_.uniform();
    if (r >= 0.45 && r < 0.6 && !split_free_.empty()) {
      threshold_jump(x);
    } else if (r < 0.6) {
      const double magnitude = std::exp(rng_.uniform(std::log(0.01), std::log(3.0)));
      const std::size_t k = rng_.uniform() < 0.5 ? 1 : 1 + rng_.index(free_.size());
      for (std::size_t j = 0; j < k; ++j) {
        const int i = free_[rng_.index(free_.size())];
        x[static_cast<std::size_t>(i)] += step(i, magnitude);
      }
    } else if (r < 0.8) {
      const double t = rng_.uniform(0.3, 1.2);
      for (int i : free_) {
        const auto u = static_cast<std::size_t>(i);
        x[u] = o_[u] + t * (x[u] - o_[u]);
      }
    } else {
      const auto u = static_cast<std::size_t>(free_[rng_.index(free_.size())]);
      x[u] = o_[u];
    }
    project(x);
    return x;
  }

  /// Accept a move toward o only if it stays valid and, for later diverse
  /// slots, does not raise the distance-plus-diversity objective.
  bool accept(const Scored& cand, const Scored& current) const {
    if (!cand.valid) return false;
    return previous_.empty() || cand.base() <= current.base();
  }

  Scored polish(Scored best) {
    {
      const std::vector<double> c = best.x;
      double lo = 0.0, hi = 1.0;
      for (int k = 0; k < kBisectSteps; ++k) {
        const double mid = 0.5 * (lo + hi);
        std::vector<double> x(o_.size());
        for (std::size_t u = 0; u < x.size(); ++u) x[u] = o_[u] + mid * (c[u] - o_[u]);
        project(x);
        Scored s = score(std::move(x));
        if (accept(s, best)) {
          hi = mid;
          best = std::move(s);
        } else {
          lo = mid;
        }
      }
    }
    for (int pass = 0; pass < kPolishPasses; ++pass) {
      bool changed = false;
      for (int i : free_) {
        const auto u = static_cast<std::size_t>(i);
        if (best.x[u] == o_[u]) continue;
        std::vector<double> x = best.x;
        x[u] = o_[u];
        Scored s = score(x);
        if (accept(s, best)) {
          best = std::move(s);
          changed = true;
          continue;
        }
        const double from = o_[u], to = best.x[u];
        if (space_.integer[u]) {
          const double dir = to > from ? 1.0 : -1.0;
          for (double v = std::round(from) + dir; dir * (to - v) > 0.5; v += dir) {
            x[u] = v;
            Scored t = score(x);
            if (accept(t, best)) {
              best = std::move(t);
              changed = true;
              break;
            }
          }
          continue;
        }
        double lo = 0.0, hi = 1.0;
        for (int k = 0; k < kBisectSteps && (hi - lo) * std::abs(to - from) > 1e-12 * space_.scales[u]; ++k) {
          const double mid = 0.5 * (lo + hi);
          x[u] = from + mid * (to - from);
          Scored t = score(x);
          if (accept(t, best)) {
            hi = mid;
            best = std::move(t);
            changed = true;
          } else {
            lo = mid;
          }
        }
      }
      if (!changed) break;
    }
    return best;
  }

  /// Polishes the leading candidate and the closest archived ones, keeping
  /// the one with the lowest distance-plus-diversity objective.
  CFCandidate finish(const Scored& lead, double lam) {
    std::vector<Scored> seeds{lead};
    for (const Scored& a : archive_) {
      if (seeds.size() >= kPolishCandidates) break;
      if (a.x != lead.x) seeds.push_back(a);
    }
    std::optional<Scored> best;
    for (const Scored& s : seeds) {
      Scored p = polish(s);
      if (!best || p.base() < best->base()) best = std::move(p);
    }
    return CFCandidate{best->x, best->distance, lam};
  }

  const TreeModel& model_;
  std::span<const double> o_;
  int target_;
  const SearchSpace& space_;
  const CFConfig& cfg_;
  const std::vector<std::vector<double>>& previous_;
  Rng& rng_;
  std::vector<int> free_;
  /// Free features some tree splits on, with their sorted thresholds.
  std::vector<int> split_free_;
  std::vector<std::vector<double>> thresholds_;
  std::vector<Scored> archive_;
};

FilteredObs with_features(const FilteredObs& base, std::span<const double> x) {
  FilteredObs o = base;
  std::copy(x.begin(), x.end(), o.features.begin());
  return o;
}

}  // namespace

void CFConfig::validate(int n_features) const {
  if (!(lambda_init > 0.0)) throw Error(ErrorCode::kInvalidArgument, "lambda_init must be positive");
  if (!(lambda_growth > 1.0)) throw Error(ErrorCode::kInvalidArgument, "lambda_growth must exceed 1");
  if (m_diverse < 1) throw Error(ErrorCode::kInvalidArgument, "m_diverse must be at least 1");
  if (population < 4) throw Error(ErrorCode::kInvalidArgument, "population must be at least 4");
  if (!feature_scales.empty()) {
    if (static_cast<int>(feature_scales.size()) != n_features)
      throw Error(ErrorCode::kShapeMismatch, "feature_scales length does not match the model");
    for (double s : feature_scales)
      if (!(s > 0.0)) throw Error(ErrorCode::kInvalidArgument, "feature scales must be positive");
  }
  if (!feasible_ranges.empty() && static_cast<int>(feasible_ranges.size()) != n_features)
    throw Error(ErrorCode::kShapeMismatch, "feasible_ranges length does not match the model");
  for (int i : frozen_features)
    if (i < 0 || i >= n_features) throw Error(ErrorCode::kInvalidArgument, "frozen feature index out of range");
}

std::vector<FeatureRange> default_observation_ranges() {
  std::vector<FeatureRange> r(kFeatureCount);
  r[kEgoSpeedIndex] = {0.0, 10.0};
  for (int s = 0; s < kSlots; ++s) {
    r[static_cast<std::size_t>(feature_index(s, SlotField::kRelX))] = {-50.0, 150.0};
    r[static_cast<std::size_t>(feature_index(s, SlotField::kRelY))] = {-15.0, 15.0};
    r[static_cast<std::size_t>(feature_index(s, SlotField::kRelHeading))] = {-std::numbers::pi, std::numbers::pi};
    r[static_cast<std::size_t>(feature_index(s, SlotField::kSpeed))] = {0.0, 10.0};
    r[static_cast<std::size_t>(feature_index(s, SlotField::kKind))] = {0.0, 4.0};
    r[static_cast<std::size_t>(feature_index(s, SlotField::kPhase))] = {1.0, 3.0};
  }
  return r;
}

SearchSpace plain_space(int n_features, const CFConfig& cfg) {
  cfg.validate(n_features);
  const auto n = static_cast<std::size_t>(n_features);
  SearchSpace sp;
  sp.scales = cfg.feature_scales.empty() ? std::vector<double>(n, 1.0) : cfg.feature_scales;
  sp.ranges = cfg.feasible_ranges.empty()
                  ? std::vector<FeatureRange>(n, FeatureRange{-std::numeric_limits<double>::max(),
                                                              std::numeric_limits<double>::max()})
                  : cfg.feasible_ranges;
  sp.free.assign(n, 1);
  sp.integer.assign(n, 0);
  for (int i : cfg.frozen_features) sp.free[static_cast<std::size_t>(i)] = 0;
  for (int i : cfg.integer_features) sp.integer[static_cast<std::size_t>(i)] = 1;
  return sp;
}

SearchSpace observation_space(const FilteredObs& o, const CFConfig& cfg) {
  CFConfig c = cfg;
  if (c.feasible_ranges.empty()) c.feasible_ranges = default_observation_ranges();
  SearchSpace sp = plain_space(kFeatureCount, c);
  sp.free[kEgoSpeedIndex] = 0;
  for (int s = 0; s < kSlots; ++s) {
    const auto idx = [s](SlotField f) { return static_cast<std::size_t>(feature_index(s, f)); };
    sp.free[idx(SlotField::kKind)] = 0;
    sp.integer[idx(SlotField::kKind)] = 1;
    sp.integer[idx(SlotField::kPhase)] = 1;
    if (o.is_sentinel(s)) {
      for (int f = 0; f < kSlotWidth; ++f) sp.free[idx(static_cast<SlotField>(f))] = 0;
    } else if (o.kind(s) == KindCode::kTrafficLight) {
      sp.free[idx(SlotField::kRelY)] = 0;
      sp.free[idx(SlotField::kRelHeading)] = 0;
      sp.free[idx(SlotField::kSpeed)] = 0;
    } else {
      sp.free[idx(SlotField::kPhase)] = 0;
    }
  }
  for (std::size_t i = 0; i < sp.ranges.size(); ++i) {
    sp.ranges[i].lo = std::min(sp.ranges[i].lo, o.features[i]);
    sp.ranges[i].hi = std::max(sp.ranges[i].hi, o.features[i]);
  }
  return sp;
}

std::vector<double> mad_scales(std::span<const FilteredObs> data) {
  std::vector<double> scales(kFeatureCount, 1.0);
  std::vector<double> ego;
  std::array<std::vector<double>, 4> fields;
  for (const FilteredObs& o : data) {
    ego.push_back(o.ego_speed());
    for (int s = 0; s < kSlots; ++s) {
      if (o.is_sentinel(s)) continue;
      fields[0].push_back(o.at(s, SlotField::kRelX));
      fields[1].push_back(o.at(s, SlotField::kRelY));
      if (o.kind(s) == KindCode::kTrafficLight) continue;
      fields[2].push_back(o.at(s, SlotField::kRelHeading));
      fields[3].push_back(o.at(s, SlotField::kSpeed));
    }
  }
  scales[kEgoSpeedIndex] = mad(ego);
  for (int f = 0; f < 4; ++f) {
    const double m = mad(fields[static_cast<std::size_t>(f)]);
    for (int s = 0; s < kSlots; ++s) scales[static_cast<std::size_t>(feature_index(s, static_cast<SlotField>(f)))] = m;
  }
  return scales;
}

double standardized_distance(std::span<const double> a, std::span<const double> b, std::span<const double> scales) {
  if (a.size() != b.size() || a.size() != scales.size())
    throw Error(ErrorCode::kShapeMismatch, "distance operands differ in length");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = (a[i] - b[i]) / scales[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

double cf_loss(const TreeModel& model, std::span<const double> o_prime, std::span<const double> o, ActionClass target,
               double lam, std::span<const double> scales) {
  const double gap = predict_proba(model, o_prime)[static_cast<std::size_t>(target)] - 1.0;
  return lam * gap * gap + standardized_distance(o_prime, o, scales);
}

std::vector<CFCandidate> search_counterfactuals(const TreeModel& model, std::span<const double> o, ActionClass target,
                                                const SearchSpace& space, const CFConfig& cfg, int m,
                                                std::uint64_t seed) {
  if (!model.fitted()) throw Error(ErrorCode::kUnfittedModel, "tree model is not fitted");
  if (static_cast<int>(o.size()) != model.n_features() || space.size() != model.n_features())
    throw Error(ErrorCode::kShapeMismatch, "input does not match the model feature count");
  if (predict_class(model, o) == target) throw Error(ErrorCode::kInvalidTarget, "target equals the current class");
  std::vector<CFCandidate> out;
  const std::vector<int> used = model.used_features();
  if (std::none_of(used.begin(), used.end(), [&](int f) { return space.free[static_cast<std::size_t>(f)] != 0; }))
    return out;
  Rng rng(seed);
  std::vector<std::vector<double>> previous;
  for (int j = 0; j < m; ++j) {
    Search search(model, o, static_cast<int>(target), space, cfg, previous, rng);
    std::optional<CFCandidate> c = search.run();
    if (!c) break;
    previous.push_back(c->x);
    out.push_back(std::move(*c));
  }
  return out;
}

namespace {

std::vector<CFExample> to_examples(const TreeModel& model, const FilteredObs& o, ActionClass target,
                                   std::vector<CFCandidate> found, std::uint64_t seed) {
  const ActionClass original = predict_class(model, o.features);
  std::vector<CFExample> out;
  for (CFCandidate& c : found) {
    CFExample e;
    e.original = o;
    e.original_class = original;
    e.cf = with_features(o, c.x);
    e.target_class = target;
    e.distance = c.distance;
    e.lambda_final = c.lambda_final;
    e.valid = predict_class(model, e.cf.features) == target && target != original;
    e.seed = seed;
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace

CFExample generate_cf(const TreeModel& model, const FilteredObs& o, ActionClass target, const CFConfig& cfg,
                      std::uint64_t seed) {
  const SearchSpace sp = observation_space(o, cfg);
  auto found = search_counterfactuals(model, o.features, target, sp, cfg, 1, seed);
  if (found.empty()) throw Error(ErrorCode::kNotFound, "no valid counterfactual within the search budget");
  return to_examples(model, o, target, std::move(found), seed).front();
}

std::vector<CFExample> generate_diverse_cfs(const TreeModel& model, const FilteredObs& o, ActionClass target,
                                            const CFConfig& cfg, std::uint64_t seed) {
  const SearchSpace sp = observation_space(o, cfg);
  return to_examples(model, o, target, search_counterfactuals(model, o.features, target, sp, cfg, cfg.m_diverse, seed),
                     seed);
}

Json to_json(const CFExample& e) {
  Json j{{"original", e.original.features},
         {"original_ids", e.original.source_ids},
         {"cf", e.cf.features},
         {"classes", {static_cast<int>(e.original_class), static_cast<int>(e.target_class)}},
         {"distance", e.distance},
         {"lambda_final", e.lambda_final},
         {"valid", e.valid},
         {"seed", e.seed}};
  if (e.oracle_distance) j["oracle_distance"] = *e.oracle_distance;
  return j;
}

CFExample cf_example_from_json(const Json& j) {
  try {
    CFExample e;
    e.original = FilteredObs::from_features(j.at("original").get<std::vector<double>>());
    e.original.source_ids = j.at("original_ids").get<std::array<int, kSlots>>();
    e.cf = FilteredObs::from_features(j.at("cf").get<std::vector<double>>());
    e.cf.source_ids = e.original.source_ids;
    const auto classes = j.at("classes").get<std::array<int, 2>>();
    for (int c : classes)
      if (c < 0 || c >= kNumClasses) throw Error(ErrorCode::kParse, "class index out of range");
    e.original_class = static_cast<ActionClass>(classes[0]);
    e.target_class = static_cast<ActionClass>(classes[1]);
    e.distance = j.at("distance").get<double>();
    e.lambda_final = j.at("lambda_final").get<double>();
    e.valid = j.at("valid").get<bool>();
    e.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("oracle_distance")) e.oracle_distance = j.at("oracle_distance").get<double>();
    return e;
  } catch (const Json::exception& ex) {
    throw Error(ErrorCode::kParse, std::string("malformed counterfactual record: ") + ex.what());
  }
}

}  // namespace cfdrive
