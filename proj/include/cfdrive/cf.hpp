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
#include <optional>
#include <span>
#include <vector>

#include "cfdrive/json_io.hpp"
#include "cfdrive/observation.hpp"
#include "cfdrive/trees.hpp"

namespace cfdrive {

struct FeatureRange {
  double lo = 0.0;
  double hi = 0.0;
};

struct CFConfig {
  double lambda_init = 0.1;
  double lambda_growth = 2.0;
  double lambda_max = 1e4;
  int max_search_iters = 2000;
  /// Evolution iterations run at each lambda before escalating.
  int iters_per_lambda = 15;
  int population = 40;
  int m_diverse = 4;
  double diversity_weight = 0.5;
  /// Minimum standardized distance between CFs of one diverse set.
  double min_diverse_distance = 0.3;
  /// Frozen in addition to the per-sample observation rules.
  std::vector<int> frozen_features;
  /// Rounded to integers (observation phase codes are always integer).
  std::vector<int> integer_features;
  /// Per-feature MAD; empty means unit scales.
  std::vector<double> feature_scales;
  /// Per-feature bounds; empty means the observation defaults.
  std::vector<FeatureRange> feasible_ranges;

  void validate(int n_features) const;
};

/// Per-feature search constraints for one input.
struct SearchSpace {
  std::vector<double> scales;
  std::vector<FeatureRange> ranges;
  std::vector<char> free;
  std::vector<char> integer;

  int size() const { return static_cast<int>(scales.size()); }
};

/// Default bounds for observation features (rel_x, rel_y, heading, speed, phase).
std::vector<FeatureRange> default_observation_ranges();

/// Observation rules: ego speed, kind codes and padded slots are frozen; light
/// slots may only change rel_x and phase; actor slots keep phase fixed.
SearchSpace observation_space(const FilteredObs& o, const CFConfig& cfg);
/// Every feature free except cfg.frozen_features.
SearchSpace plain_space(int n_features, const CFConfig& cfg);

/// Median absolute deviation per observation field, pooled across slots over
/// non-padded entries; phase and kind codes use unit scale. Floored at 1e-6.
std::vector<double> mad_scales(std::span<const FilteredObs> data);

double standardized_distance(std::span<const double> a, std::span<const double> b, std::span<const double> scales);

/// lam * (p_target(o') - 1)^2 + standardized distance(o, o').
double cf_loss(const TreeModel& model, std::span<const double> o_prime, std::span<const double> o, ActionClass target,
               double lam, std::span<const double> scales);

struct CFCandidate {
  std::vector<double> x;
  double distance = 0.0;
  double lambda_final = 0.0;
};

/// Core search over a raw feature vector. Returns up to m valid candidates in
/// generation order, stopping at the first slot whose search fails. Inputs
/// whose free features never appear in a split return nothing.
std::vector<CFCandidate> search_counterfactuals(const TreeModel& model, std::span<const double> o, ActionClass target,
                                                const SearchSpace& space, const CFConfig& cfg, int m,
                                                std::uint64_t seed);

struct CFExample {
  FilteredObs original;
  ActionClass original_class = ActionClass::kGo;
  FilteredObs cf;
  ActionClass target_class = ActionClass::kGo;
  double distance = 0.0;
  double lambda_final = 0.0;
  bool valid = false;
  std::uint64_t seed = 0;
  /// Brute-force optimum distance, set only by oracle fixtures.
  std::optional<double> oracle_distance;
};

/// Throws Error(kInvalidTarget) when target is the current class and
/// Error(kNotFound) when the budget runs out without a valid candidate.
CFExample generate_cf(const TreeModel& model, const FilteredObs& o, ActionClass target, const CFConfig& cfg,
                      std::uint64_t seed);
std::vector<CFExample> generate_diverse_cfs(const TreeModel& model, const FilteredObs& o, ActionClass target,
                                            const CFConfig& cfg, std::uint64_t seed);

Json to_json(const CFExample& e);
CFExample cf_example_from_json(const Json& j);

}  // namespace cfdrive
