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

#include "cfdrive/common.hpp"

#include <cmath>

#include "cfdrive/action.hpp"

namespace cfdrive {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownTemplate: return "UnknownTemplate";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kUnfittedModel: return "UnfittedModel";
    case ErrorCode::kInvalidTarget: return "InvalidTarget";
    case ErrorCode::kNotFound: return "NotFound";
    case ErrorCode::kImplausible: return "Implausible";
    case ErrorCode::kInsufficientCFs: return "InsufficientCFs";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kDivergedLoss: return "DivergedLoss";
    case ErrorCode::kEmptyResults: return "EmptyResults";
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

std::string_view class_name(ActionClass c) {
  switch (c) {
    case ActionClass::kGo: return "GO";
    case ActionClass::kSlow: return "SLOW";
    case ActionClass::kStop: return "STOP";
  }
  return "UNKNOWN";
}

double Action::target_speed(double dt) const {
  double total = 0.0;
  for (int k = 1; k < kHorizon; ++k) total += (waypoints[k] - waypoints[k - 1]).norm();
  return total / ((kHorizon - 1) * dt);
}

}  // namespace cfdrive
