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

#ifndef SHIELD_POLICIES_H_
#define SHIELD_POLICIES_H_

#include <limits>
#include <string>
#include <string_view>

#include "shield/dynamics.h"

namespace shield {

struct PdGains {
  PdGains() = default;
  PdGains(double kp_in, double kd_in);
  double kp = 1.0;
  double kd = 1.0;
};

// Axis-aligned rectangle [x_min, x_max] x [y_min, y_max].
struct Box2 {
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;

  bool Contains(double x, double y) const {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }
  double cx() const { return 0.5 * (x_min + x_max); }
  double cy() const { return 0.5 * (y_min + y_max); }
};

// Double integrator: a_y = kp (y_ref - y) - kd v_y, a_x = kd (v_ref - v_x).
Policy LineTracker(const PdGains& gains, double y_ref, double v_ref, const InputBounds& bounds);

// Scales the along-track velocity target by
// clamp((align_out - |y - goal_y|) / (align_out - align_in), 0, 1), so a robot
// far off the centerline first returns to it. Infinite values disable it.
struct CenterlineGate {
  double align_in = std::numeric_limits<double>::infinity();
  double align_out = std::numeric_limits<double>::infinity();
};

// Double integrator: velocity-capped PD toward `goal`,
// a = kd (clip(kp (goal - p), max_speed) - v).
Policy GoalPd(const PdGains& gains, double goal_x, double goal_y, double max_speed,
              const InputBounds& bounds, const CenterlineGate& gate = {});

struct PocketParams {
  double center_x = 0.0;
  double center_y = 0.0;
  // Lower edge of the pocket opening; below it the robot is in the corridor.
  double mouth_y = 0.0;
  // y of the corridor centerline used while approaching the pocket.
  double corridor_y = 0.0;
  // The pocket target height is blended in as |x - center_x| shrinks from
  // align_out to align_in.
  double align_in = 0.3;
  double align_out = 0.8;
  double max_speed = 1.5;
  Box2 goal_region;
};

// Which point the pocket backup drives to from x.
enum class PocketTarget { kPocket, kGoal };
PocketTarget SelectPocketTarget(const PocketParams& params, const State& x);

// Double integrator: drive to the pocket and stay there, or hold the goal when
// already inside the goal region. Same velocity-capped PD as GoalPd.
Policy PocketBackup(const PdGains& gains, const PocketParams& params, const InputBounds& bounds);

// Cascaded lateral/speed gains for the bicycle model.
struct CascadeGains {
  // Outer lateral loop: steer target = -(kp e_y + kd e_y_dot) [rad/m, rad s/m].
  PdGains lateral{0.08, 0.12};
  // Inner steering loop: delta_dot = steer_rate (delta_des - delta).
  double steer_rate = 4.0;
  // Speed loop: tau_des = speed (v_ref - V); tau_dot = torque_rate (tau_des - tau).
  double speed = 800.0;
  double torque_rate = 4.0;
  // Lateral acceleration used to cap the steering target at speed [m/s^2].
  double max_lateral_accel = 5.0;
};

struct CascadeParams {
  double target_y = 0.0;
  double v_ref = 10.0;
  double wheelbase = 2.8;
  double max_steer = 20.0 * 0.017453292519943295;
  CascadeGains gains;
};

// Bicycle: cascaded PD lane controller. Outer loop maps lateral error and its
// rate to a steering target, inner loops map steering and torque errors to
// [delta_dot, tau_dot].
Policy LaneCascade(const CascadeParams& params, const InputBounds& bounds);

// Scenario-file description of a policy.
struct PolicySpec {
  enum class Kind { kLineTracker, kGoalPd, kPocketBackup, kCenterlineTracker, kLaneChangeBackup };
  Kind kind = Kind::kLineTracker;
  PdGains gains;
  double y_ref = 0.0;  // line tracker reference line [m]
  double v_ref = 0.0;  // speed setpoint [m/s]
  double goal_x = 0.0;
  double goal_y = 0.0;
  double max_speed = 1.5;
  CenterlineGate gate;
  PocketParams pocket;
  int lane_index = 0;
  CascadeGains cascade;
};

std::string_view KindName(PolicySpec::Kind kind);
PolicySpec::Kind ParseKind(std::string_view name);

}  // namespace shield

#endif  // SHIELD_POLICIES_H_
