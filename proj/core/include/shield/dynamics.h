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

#ifndef SHIELD_DYNAMICS_H_
#define SHIELD_DYNAMICS_H_

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "shield/types.h"

namespace shield {

// Feedback law (t, x) -> u. Must be pure: candidate trajectories restart
// policies from arbitrary states.
using Policy = std::function<Input(double, const State&)>;

// x' = f(t, x) + g(t, x) u with u in `bounds`.
struct ControlAffineModel {
  std::string name;
  int n = 0;
  int m = 0;
  std::function<State(double, const State&)> drift;
  std::function<InputMatrix(double, const State&)> input_matrix;
  InputBounds bounds;
  // Optional projection applied after every integration step to enforce
  // state magnitude limits. Returns true when it changed the state.
  std::function<bool(State&)> clamp_state;
};

// Sampled closed-loop rollout. `inputs[k]` is the saturated policy output at
// `times[k]`; states has one more entry than inputs.
struct Trajectory {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<double> times;
  std::vector<State> states;
  std::vector<Input> inputs;
  // Number of steps on which the model's state clamp was active.
  int clamp_events = 0;

  const State& back() const { return states.back(); }
  double duration() const { return times.back() - t0; }
};

struct SensitivitySample {
  double tau;
  State state;
  // Q = d phi_tau(x0) / d x0.
  StateMatrix jacobian;
};

struct SensitivityTrace {
  std::vector<SensitivitySample> samples;
  int clamp_events = 0;
};

// Step layout covering [0, duration] with step dt and one shortened final
// step when duration is not a multiple of dt.
struct StepSchedule {
  StepSchedule(double duration, double dt);
  int full_steps = 0;
  double last_step = 0.0;  // zero when there is no partial step
  double dt = 0.0;
  double duration = 0.0;

  int num_steps() const { return full_steps + (last_step > 0.0 ? 1 : 0); }
  double StepStart(int k) const { return k * dt; }
  double StepLength(int k) const { return k < full_steps ? dt : last_step; }
  // Offset of the sample that ends step k.
  double StepEnd(int k) const { return k + 1 == num_steps() ? duration : (k + 1) * dt; }
};

State EvalDynamics(const ControlAffineModel& model, double t, const State& x, const Input& u);

// Scale radially onto the norm ball, then clamp to the box. This is the
// Euclidean projection when the box contains the ball, as InputBounds::Norm
// builds it. Idempotent.
Input Saturate(const InputBounds& bounds, const Input& u);

// f + g * sat(policy(t, x)).
State ClosedLoopField(const ControlAffineModel& model, const Policy& policy, double t,
                      const State& x);

// One classical RK4 step of the closed loop; the policy is evaluated at every
// stage. Applies the model's state clamp; sets *clamped when it was active.
State Rk4Step(const ControlAffineModel& model, const Policy& policy, double t, const State& x,
              double h, bool* clamped = nullptr);

// Streams the closed-loop rollout. `visit(k, t, x)` is called for the initial
// sample (k = 0) and after every step; returning false stops the rollout.
// Throws DivergenceError on a non-finite state.
template <typename Visitor>
int Rollout(const ControlAffineModel& model, const Policy& policy, const State& x0, double t0,
            double duration, double dt, Visitor&& visit) {
  const StepSchedule schedule(duration, dt);
  State x = x0;
  int clamp_events = 0;
  if (!visit(0, t0, x)) return clamp_events;
  for (int k = 0; k < schedule.num_steps(); ++k) {
    bool clamped = false;
    x = Rk4Step(model, policy, t0 + schedule.StepStart(k), x, schedule.StepLength(k), &clamped);
    if (clamped) ++clamp_events;
    if (!x.allFinite()) {
      throw DivergenceError(model.name + ": non-finite state at rollout step " +
                                std::to_string(k + 1),
                            k + 1);
    }
    if (!visit(k + 1, t0 + schedule.StepEnd(k), x)) break;
  }
  return clamp_events;
}

Trajectory IntegrateFlow(const ControlAffineModel& model, const Policy& policy, const State& x0,
                         double t0, double duration, double dt);

// Joint RK4 integration of the closed loop and its variational equation
// Q' = D_x F_cl(t, x) Q, Q(0) = I. The Jacobian of the closed-loop field is
// taken by central differences with per-coordinate step
// rel_step * max(1, |x_i|). One sample per integration step.
SensitivityTrace PropagateSensitivity(const ControlAffineModel& model, const Policy& policy,
                                      const State& x0, double t0, double horizon, double dt,
                                      double rel_step = 1e-5);

// Central-difference Jacobian of the closed-loop field at (t, x).
StateMatrix ClosedLoopJacobian(const ControlAffineModel& model, const Policy& policy, double t,
                               const State& x, double rel_step = 1e-5);

// Planar double integrator, state [x, y, vx, vy], input [ax, ay]. A finite
// max_speed clamps the velocity magnitude after each step.
ControlAffineModel DoubleIntegrator(const InputBounds& bounds,
                                    double max_speed = std::numeric_limits<double>::infinity());

}  // namespace shield

#endif  // SHIELD_DYNAMICS_H_
