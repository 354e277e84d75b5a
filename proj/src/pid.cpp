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

#include "cfdrive/pid.hpp"

#include <algorithm>
#include <cmath>

namespace cfdrive {

void PidController::reset() {
  lat_integral_ = lat_prev_ = lon_integral_ = lon_prev_ = 0.0;
  primed_ = false;
}

Control PidController::operator()(const WorldState& world, const Action& action) {
  const double dt = physics_.dt;
  const double lim = cfg_.integral_limit;

  // Aim point: first waypoint beyond the lookahead, else the furthest one.
  const Vec2* aim = nullptr;
  for (const Vec2& w : action.waypoints) {
    if (w.norm() >= cfg_.min_lookahead) {
      aim = &w;
      break;
    }
  }
  if (aim == nullptr && action.waypoints.back().norm() > 0.05) aim = &action.waypoints.back();
  const double lat_err = aim ? std::atan2(aim->y, aim->x) : 0.0;

  const double lon_err = action.target_speed(dt) - world.ego.speed;

  lat_integral_ = std::clamp(lat_integral_ + lat_err * dt, -lim, lim);
  const double lat_d = primed_ ? (lat_err - lat_prev_) / dt : 0.0;
  const PidGains& gl = cfg_.lateral;
  Control c;
  c.steer = std::clamp(gl.kp * lat_err + gl.ki * lat_integral_ + gl.kd * lat_d, -1.0, 1.0);

  if (action.brake) {
    lon_integral_ = 0.0;
    c.throttle = 0.0;
    c.brake = 1;
  } else {
    lon_integral_ = std::clamp(lon_integral_ + lon_err * dt, -lim, lim);
    const double lon_d = primed_ ? (lon_err - lon_prev_) / dt : 0.0;
    const PidGains& g = cfg_.longitudinal;
    c.throttle = std::clamp(g.kp * lon_err + g.ki * lon_integral_ + g.kd * lon_d, 0.0, 1.0);
    c.brake = 0;
  }
  lat_prev_ = lat_err;
  lon_prev_ = lon_err;
  primed_ = true;
  return c;
}

}  // namespace cfdrive
