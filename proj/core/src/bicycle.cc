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

#include "shield/bicycle.h"

#include <algorithm>
#include <cmath>

namespace shield {

double FialaLateralForce(double alpha, double stiffness, double force_max) {
  if (force_max <= 0.0) return 0.0;
  const double slide = std::atan(3.0 * force_max / stiffness);
  if (std::abs(alpha) >= slide) return -force_max * (alpha > 0.0 ? 1.0 : -1.0);
  const double ta = std::tan(alpha);
  return -stiffness * ta + stiffness * stiffness / (3.0 * force_max) * std::abs(ta) * ta -
         stiffness * stiffness * stiffness / (27.0 * force_max * force_max) * ta * ta * ta;
}

ControlAffineModel Bicycle(const BicycleParams& p) {
  ControlAffineModel model;
  model.name = "bicycle";
  model.n = 8;
  model.m = 2;
  Input lim(2);
  lim << p.max_steer_rate, p.max_torque_rate;
  model.bounds = InputBounds::Box(-lim, lim);

  const double wheelbase = p.front_axle + p.rear_axle;
  const double fz_front = p.mass * p.gravity * p.rear_axle / wheelbase;
  const double fz_rear = p.mass * p.gravity * p.front_axle / wheelbase;

  model.drift = [p, fz_front, fz_rear](double, const State& x) {
    const double yaw = x[kYaw];
    const double r = x[kYawRate];
    const double beta = x[kSideslip];
    const double speed = x[kSpeed];
    const double steer = x[kSteer];
    const double v_eff = std::max(speed, p.min_speed);

    // Rear-wheel drive, friction-limited longitudinal force; the lateral
    // capacity of the rear tire is derated by what the drive force uses.
    const double rear_cap = p.friction * fz_rear;
    const double fx = std::clamp(x[kTorque] / p.wheel_radius, -0.95 * rear_cap, 0.95 * rear_cap);
    const double fy_rear_max = std::sqrt(rear_cap * rear_cap - fx * fx);

    const double alpha_f =
        std::atan2(v_eff * std::sin(beta) + p.front_axle * r, v_eff * std::cos(beta)) - steer;
    const double alpha_r =
        std::atan2(v_eff * std::sin(beta) - p.rear_axle * r, v_eff * std::cos(beta));
    const double fy_f = FialaLateralForce(alpha_f, p.cornering_front, p.friction * fz_front);
    const double fy_r = FialaLateralForce(alpha_r, p.cornering_rear, fy_rear_max);

    const double fx_body = fx - fy_f * std::sin(steer);
    const double fy_body = fy_f * std::cos(steer) + fy_r;

    State dx(8);
    dx[kPx] = speed * std::cos(yaw + beta);
    dx[kPy] = speed * std::sin(yaw + beta);
    dx[kYaw] = r;
    dx[kYawRate] = (p.front_axle * fy_f * std::cos(steer) - p.rear_axle * fy_r) / p.yaw_inertia;
    dx[kSideslip] =
        (-fx_body * std::sin(beta) + fy_body * std::cos(beta)) / (p.mass * v_eff) - r;
    dx[kSpeed] = (fx_body * std::cos(beta) + fy_body * std::sin(beta)) / p.mass;
    dx[kSteer] = 0.0;
    dx[kTorque] = 0.0;
    return dx;
  };
  model.input_matrix = [](double, const State&) {
    InputMatrix g = InputMatrix::Zero(8, 2);
    g(kSteer, 0) = 1.0;
    g(kTorque, 1) = 1.0;
    return g;
  };
  model.clamp_state = [p](State& x) {
    const State before = x;
    x[kSpeed] = std::clamp(x[kSpeed], 0.0, p.max_speed);
    x[kSteer] = std::clamp(x[kSteer], -p.max_steer, p.max_steer);
    x[kTorque] = std::clamp(x[kTorque], -p.max_torque, p.max_torque);
    return x != before;
  };
  return model;
}

}  // namespace shield
