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

#include "shield/dynamics.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace shield {
namespace {

// Tolerance, in units of dt, below which a remainder is treated as rounding.
constexpr double kScheduleEps = 1e-9;

State Combine(const State& x, double h, const State& k1, const State& k2, const State& k3,
              const State& k4) {
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

StepSchedule::StepSchedule(double duration_in, double dt_in) : dt(dt_in), duration(duration_in) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("rollout: dt must be positive");
  if (!(duration >= 0.0) || !std::isfinite(duration)) {
    throw std::invalid_argument("rollout: duration must be nonnegative");
  }
  full_steps = static_cast<int>(std::floor(duration / dt + kScheduleEps));
  const double rem = duration - full_steps * dt;
  last_step = rem > kScheduleEps * dt ? rem : 0.0;
}

State EvalDynamics(const ControlAffineModel& model, double t, const State& x, const Input& u) {
  CheckDim(x, model.n, "eval_dynamics state");
  CheckDim(u, model.m, "eval_dynamics input");
  State dx = model.drift(t, x) + model.input_matrix(t, x) * u;
  if (!dx.allFinite()) {
    throw std::runtime_error(model.name + ": non-finite dynamics output");
  }
  return dx;
}

Input Saturate(const InputBounds& bounds, const Input& u) {
  CheckDim(u, bounds.dim(), "saturate");
  Input out = u;
  if (bounds.has_norm()) {
    // The slack keeps a rescaled input, whose norm may exceed the bound by an
    // ulp, from being scaled again.
    const double norm = out.norm();
    if (norm > bounds.max_norm * (1.0 + 4.0 * std::numeric_limits<double>::epsilon())) {
      out *= bounds.max_norm / norm;
    }
  }
  return out.cwiseMax(bounds.lower).cwiseMin(bounds.upper);
}

State ClosedLoopField(const ControlAffineModel& model, const Policy& policy, double t,
                      const State& x) {
  const Input u = Saturate(model.bounds, policy(t, x));
  return model.drift(t, x) + model.input_matrix(t, x) * u;
}

State Rk4Step(const ControlAffineModel& model, const Policy& policy, double t, const State& x,
              double h, bool* clamped) {
  const State k1 = ClosedLoopField(model, policy, t, x);
  const State k2 = ClosedLoopField(model, policy, t + 0.5 * h, x + (0.5 * h) * k1);
  const State k3 = ClosedLoopField(model, policy, t + 0.5 * h, x + (0.5 * h) * k2);
  const State k4 = ClosedLoopField(model, policy, t + h, x + h * k3);
  State next = Combine(x, h, k1, k2, k3, k4);
  const bool active = model.clamp_state && model.clamp_state(next);
  if (clamped != nullptr) *clamped = active;
  return next;
}

Trajectory IntegrateFlow(const ControlAffineModel& model, const Policy& policy, const State& x0,
                         double t0, double duration, double dt) {
  CheckDim(x0, model.n, "integrate_flow");
  Trajectory traj;
  traj.t0 = t0;
  traj.dt = dt;
  const StepSchedule schedule(duration, dt);
  traj.times.reserve(schedule.num_steps() + 1);
  traj.states.reserve(schedule.num_steps() + 1);
  traj.inputs.reserve(schedule.num_steps());
  traj.clamp_events = Rollout(model, policy, x0, t0, duration, dt,
                              [&](int k, double t, const State& x) {
                                if (k > 0) {
                                  const double t_prev = traj.times.back();
                                  traj.inputs.push_back(
                                      Saturate(model.bounds, policy(t_prev, traj.states.back())));
                                }
                                traj.times.push_back(t);
                                traj.states.push_back(x);
                                return true;
                              });
  return traj;
}

StateMatrix ClosedLoopJacobian(const ControlAffineModel& model, const Policy& policy, double t,
                               const State& x, double rel_step) {
  const int n = model.n;
  StateMatrix jac(n, n);
  for (int i = 0; i < n; ++i) {
    const double h = rel_step * std::max(1.0, std::abs(x[i]));
    State xp = x;
    State xm = x;
    xp[i] += h;
    xm[i] -= h;
    jac.col(i) = (ClosedLoopField(model, policy, t, xp) - ClosedLoopField(model, policy, t, xm)) /
                 (xp[i] - xm[i]);
  }
  return jac;
}

SensitivityTrace PropagateSensitivity(const ControlAffineModel& model, const Policy& policy,
                                      const State& x0, double t0, double horizon, double dt,
                                      double rel_step) {
  CheckDim(x0, model.n, "propagate_sensitivity");
  const StepSchedule schedule(horizon, dt);
  SensitivityTrace trace;
  trace.samples.reserve(schedule.num_steps() + 1);
  State x = x0;
  StateMatrix q = StateMatrix::Identity(model.n, model.n);
  trace.samples.push_back({0.0, x, q});
  for (int k = 0; k < schedule.num_steps(); ++k) {
    const double t = t0 + schedule.StepStart(k);
    const double h = schedule.StepLength(k);
    // Stage states match Rk4Step exactly so the state part is bit-identical
    // to IntegrateFlow.
    const State k1 = ClosedLoopField(model, policy, t, x);
    const StateMatrix l1 = ClosedLoopJacobian(model, policy, t, x, rel_step) * q;
    const State xs2 = x + (0.5 * h) * k1;
    const StateMatrix qs2 = q + (0.5 * h) * l1;
    const State k2 = ClosedLoopField(model, policy, t + 0.5 * h, xs2);
    const StateMatrix l2 = ClosedLoopJacobian(model, policy, t + 0.5 * h, xs2, rel_step) * qs2;
    const State xs3 = x + (0.5 * h) * k2;
    const StateMatrix qs3 = q + (0.5 * h) * l2;
    const State k3 = ClosedLoopField(model, policy, t + 0.5 * h, xs3);
    const StateMatrix l3 = ClosedLoopJacobian(model, policy, t + 0.5 * h, xs3, rel_step) * qs3;
    const State xs4 = x + h * k3;
    const StateMatrix qs4 = q + h * l3;
    const State k4 = ClosedLoopField(model, policy, t + h, xs4);
    const StateMatrix l4 = ClosedLoopJacobian(model, policy, t + h, xs4, rel_step) * qs4;
    x = Combine(x, h, k1, k2, k3, k4);
    q = q + (h / 6.0) * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
    if (model.clamp_state && model.clamp_state(x)) ++trace.clamp_events;
    if (!x.allFinite() || !q.allFinite()) {
      throw DivergenceError(model.name + ": non-finite state at sensitivity step " +
                                std::to_string(k + 1),
                            k + 1);
    }
    trace.samples.push_back({schedule.StepEnd(k), x, q});
  }
  return trace;
}

ControlAffineModel DoubleIntegrator(const InputBounds& bounds, double max_speed) {
  CheckDim(bounds.lower, 2, "double integrator bounds");
  ControlAffineModel model;
  model.name = "double_integrator";
  model.n = 4;
  model.m = 2;
  model.bounds = bounds;
  model.drift = [](double, const State& x) {
    State dx(4);
    dx << x[2], x[3], 0.0, 0.0;
    return dx;
  };
  model.input_matrix = [](double, const State&) {
    InputMatrix g = InputMatrix::Zero(4, 2);
    g(2, 0) = 1.0;
    g(3, 1) = 1.0;
    return g;
  };
  if (std::isfinite(max_speed)) {
    model.clamp_state = [max_speed](State& x) {
      const double speed = std::hypot(x[2], x[3]);
      if (speed <= max_speed) return false;
      x[2] *= max_speed / speed;
      x[3] *= max_speed / speed;
      return true;
    };
  }
  return model;
}

}  // namespace shield
