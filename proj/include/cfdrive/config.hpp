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

#include <string>

namespace cfdrive {

struct PhysicsConfig {
  double dt = 0.1;
  double cruise_speed = 6.0;
  double v_max = 8.0;
  /// Braking deceleration, also the expert's planning deceleration.
  double a_max = 4.0;
  double throttle_accel = 3.0;
  double drag = 0.15;
  double wheelbase = 2.7;
  double max_steer_angle = 0.6;
  double ego_length = 4.5;
  double ego_width = 2.0;
  double lane_half_width = 1.75;
  double offroad_threshold = 2.5;
  double layout_threshold = 6.0;
  double drivable_half_width = 7.0;
  double light_green = 7.0;
  double light_yellow = 3.0;
  double light_red = 7.0;
  /// Route timeout is route_length / timeout_speed seconds.
  double timeout_speed = 1.5;
};

struct SensorConfig {
  double detection_range = 50.0;
  double noise_sigma = 0.2;
  double light_visibility = 60.0;
  double light_cone_deg = 45.0;
  int n_detections = 8;
  int route_context = 10;
  double route_context_spacing = 2.0;
};

struct ExpertConfig {
  double corridor_margin = 1.0;
  double corridor_lookahead = 15.0;
  double light_margin = 5.0;
  double headway = 2.0;
  double min_gap = 8.0;
  double lead_stop_speed = 0.5;
  /// SLOW caps the target speed at this fraction of cruise.
  double slow_fraction = 0.75;
  /// discretize_action: GO iff target speed >= go_fraction * cruise.
  double go_fraction = 0.8;
  /// Clearance kept to an actor at the end of a STOP profile.
  double stop_buffer = 1.0;
};

struct PidGains {
  double kp = 0.0;
  double ki = 0.0;
  double kd = 0.0;
};

struct PidConfig {
  PidGains lateral{1.2, 0.0, 0.1};
  PidGains longitudinal{0.8, 0.05, 0.0};
  double integral_limit = 1.0;
  double min_lookahead = 2.0;
};

/// Everything the simulator, expert and observation filter share.
struct SimConfig {
  PhysicsConfig physics;
  SensorConfig sensor;
  ExpertConfig expert;
  PidConfig pid;
};

}  // namespace cfdrive
