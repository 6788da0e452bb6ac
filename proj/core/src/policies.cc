// Copyright 2026 The Shield Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "shield/policies.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "shield/bicycle.h"

namespace shield {
namespace {

Input VelocityCappedPd(const PdGains& gains, double tx, double ty, double max_speed,
                       const State& x, double along_scale = 1.0) {
  double vx = along_scale * gains.kp * (tx - x[0]);
  double vy = gains.kp * (ty - x[1]);
  const double speed = std::hypot(vx, vy);
  if (speed > max_speed) {
    vx *= max_speed / speed;
    vy *= max_speed / speed;
  }
  Input u(2);
  u << gains.kd * (vx - x[2]), gains.kd * (vy - x[3]);
  return u;
}

}  // namespace

PdGains::PdGains(double kp_in, double kd_in) : kp(kp_in), kd(kd_in) {
  if (!(kp >= 0.0) || !(kd >= 0.0)) throw std::invalid_argument("PdGains: gains must be >= 0");
}

Policy LineTracker(const PdGains& gains, double y_ref, double v_ref, const InputBounds& bounds) {
  return [gains, y_ref, v_ref, bounds](double, const State& x) {
    Input u(2);
    u << gains.kd * (v_ref - x[2]), gains.kp * (y_ref - x[1]) - gains.kd * x[3];
    return Saturate(bounds, u);
  };
}

Policy GoalPd(const PdGains& gains, double goal_x, double goal_y, double max_speed,
              const InputBounds& bounds, const CenterlineGate& gate) {
  if (gate.align_in > gate.align_out) throw std::invalid_argument("GoalPd: align_in > align_out");
  return [=](double, const State& x) {
    double scale = 1.0;
    if (std::isfinite(gate.align_out)) {
      const double off = std::abs(x[1] - goal_y);
      scale = off <= gate.align_in
                  ? 1.0
                  : std::clamp((gate.align_out - off) / (gate.align_out - gate.align_in), 0.0, 1.0);
    }
    return Saturate(bounds, VelocityCappedPd(gains, goal_x, goal_y, max_speed, x, scale));
  };
}

PocketTarget SelectPocketTarget(const PocketParams& params, const State& x) {
  return params.goal_region.Contains(x[0], x[1]) ? PocketTarget::kGoal : PocketTarget::kPocket;
}

Policy PocketBackup(const PdGains& gains, const PocketParams& params, const InputBounds& bounds) {
  return [gains, params, bounds](double, const State& x) {
    if (SelectPocketTarget(params, x) == PocketTarget::kGoal) {
      return Saturate(bounds, VelocityCappedPd(gains, params.goal_region.cx(),
                                               params.goal_region.cy(), params.max_speed, x));
    }
    double ty = params.center_y;
    if (x[1] < params.mouth_y) {
      // Still in the corridor: hold the centerline until aligned with the mouth.
      const double dx = std::abs(x[0] - params.center_x);
      const double w = std::clamp((params.align_out - dx) / (params.align_out - params.align_in),
                                  0.0, 1.0);
      ty = params.corridor_y + w * (params.center_y - params.corridor_y);
    }
    return Saturate(bounds,
                    VelocityCappedPd(gains, params.center_x, ty, params.max_speed, x));
  };
}

Policy LaneCascade(const CascadeParams& params, const InputBounds& bounds) {
  return [params, bounds](double, const State& x) {
    const CascadeGains& g = params.gains;
    const double speed = std::max(x[kSpeed], 1.0);
    const double e_y = x[kPy] - params.target_y;
    const double e_y_rate = x[kSpeed] * std::sin(x[kYaw] + x[kSideslip]);
    const double steer_cap =
        std::min(params.max_steer, g.max_lateral_accel * params.wheelbase / (speed * speed));
    const double steer_des =
        std::clamp(-(g.lateral.kp * e_y + g.lateral.kd * e_y_rate), -steer_cap, steer_cap);
    const double torque_des = g.speed * (params.v_ref - x[kSpeed]);
    Input u(2);
    u << g.steer_rate * (steer_des - x[kSteer]), g.torque_rate * (torque_des - x[kTorque]);
    return Saturate(bounds, u);
  };
}

std::string_view KindName(PolicySpec::Kind kind) {
  switch (kind) {
    case PolicySpec::Kind::kLineTracker:
      return "line_tracker";
    case PolicySpec::Kind::kGoalPd:
      return "goal_pd";
    case PolicySpec::Kind::kPocketBackup:
      return "pocket_backup";
    case PolicySpec::Kind::kCenterlineTracker:
      return "centerline_tracker";
    case PolicySpec::Kind::kLaneChangeBackup:
      return "lane_change_backup";
  }
  return "unknown";
}

PolicySpec::Kind ParseKind(std::string_view name) {
  for (auto kind : {PolicySpec::Kind::kLineTracker, PolicySpec::Kind::kGoalPd,
                    PolicySpec::Kind::kPocketBackup, PolicySpec::Kind::kCenterlineTracker,
                    PolicySpec::Kind::kLaneChangeBackup}) {
    if (KindName(kind) == name) return kind;
  }
  throw std::invalid_argument("unknown policy kind '" + std::string(name) + "'");
}

}  // namespace shield
