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

#ifndef SHIELD_BICYCLE_H_
#define SHIELD_BICYCLE_H_

#include "shield/dynamics.h"

namespace shield {

// State layout of the dynamic bicycle model.
enum BicycleIndex : int {
  kPx = 0,
  kPy = 1,
  kYaw = 2,
  kYawRate = 3,
  kSideslip = 4,
  kSpeed = 5,
  kSteer = 6,
  kTorque = 7,
};

inline constexpr double kDegToRad = 0.017453292519943295;

// Vehicle and actuator parameters. Chassis and tire values are generic
// passenger-car numbers; the limits are the highway experiment's.
struct BicycleParams {
  double mass = 1500.0;          // kg
  double yaw_inertia = 2500.0;   // kg m^2
  double front_axle = 1.2;       // m, CG to front axle
  double rear_axle = 1.6;        // m, CG to rear axle
  double cornering_front = 8e4;  // N/rad
  double cornering_rear = 8e4;   // N/rad
  double friction = 0.9;
  double wheel_radius = 0.3;     // m
  double gravity = 9.81;
  double min_speed = 1.0;        // m/s, floor used in slip-angle kinematics

  double max_speed = 20.0;                   // m/s
  double max_steer = 20.0 * kDegToRad;       // rad
  double max_steer_rate = 25.0 * kDegToRad;  // rad/s
  double max_torque = 4000.0;                // N m
  double max_torque_rate = 8000.0;           // N m/s
};

// Fiala brush-model lateral force for slip angle `alpha`, cornering stiffness
// `stiffness` and available friction force `force_max`.
double FialaLateralForce(double alpha, double stiffness, double force_max);

// 8-state, 2-input dynamic bicycle: x = [px, py, yaw, r, beta, V, delta, tau],
// u = [delta_dot, tau_dot]. Speed, steering and torque magnitudes are clamped
// after each integration step.
ControlAffineModel Bicycle(const BicycleParams& params = {});

}  // namespace shield

#endif  // SHIELD_BICYCLE_H_
