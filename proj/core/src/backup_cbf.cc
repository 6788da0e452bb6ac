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

#include "shield/backup_cbf.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace shield {
namespace {

using Gradient = Eigen::Matrix<double, 1, Eigen::Dynamic, Eigen::RowMajor, 1, kMaxStateDim>;

Gradient MarginGradient(const MarginFn& h, double t, const State& z, double step) {
  Gradient grad(z.size());
  for (int i = 0; i < z.size(); ++i) {
    const double d = step * std::max(1.0, std::abs(z[i]));
    State zp = z;
    State zm = z;
    zp[i] += d;
    zm[i] -= d;
    grad[i] = (h(t, zp) - h(t, zm)) / (zp[i] - zm[i]);
  }
  return grad;
}

double MarginTimeRate(const MarginFn& h, double t, const State& z, double step) {
  return (h(t + step, z) - h(t - step, z)) / (2.0 * step);
}

LinearConstraint BarrierRow(const MarginFn& h, const ClassKRate& rate, double t_abs,
                            const SensitivitySample& sample, const State& f, const InputMatrix& g,
                            double step) {
  const Gradient grad = MarginGradient(h, t_abs, sample.state, step);
  const Gradient grad_q = grad * sample.jacobian;
  LinearConstraint row;
  row.a = (grad_q * g).transpose();
  row.b = -grad_q.dot(f.transpose()) - MarginTimeRate(h, t_abs, sample.state, step) -
          Alpha(rate, h(t_abs, sample.state));
  return row;
}

}  // namespace

std::vector<int> CollocationIndices(double horizon, double dt, int n_collocation) {
  if (n_collocation < 2) throw std::invalid_argument("collocation: need at least 2 points");
  const StepSchedule schedule(horizon, dt);
  const int last = schedule.num_steps();
  std::vector<int> idx;
  idx.reserve(n_collocation);
  for (int i = 0; i < n_collocation; ++i) {
    const double tau = horizon * i / (n_collocation - 1);
    idx.push_back(i + 1 == n_collocation ? last
                                         : std::min(last, static_cast<int>(std::lround(tau / dt))));
  }
  return idx;
}

double EvalHBcbf(const BackupCbfContext& ctx, double t, const State& x) {
  const BackupSystem& sys = ctx.sys;
  CheckDim(x, sys.model.n, "h_bcbf");
  double path_min = std::numeric_limits<double>::infinity();
  State terminal = x;
  double terminal_t = t;
  Rollout(sys.model, sys.backup, x, t, sys.backup_horizon, sys.dt,
          [&](int, double tau_abs, const State& z) {
            path_min = std::min(path_min, sys.spec.margin_c(tau_abs, z));
            terminal = z;
            terminal_t = tau_abs;
            return true;
          });
  return std::min(sys.spec.margin_s0(terminal_t, terminal), path_min);
}

BcbfEvaluation EvaluateBcbf(const BackupCbfContext& ctx, double t, const State& x) {
  const BackupSystem& sys = ctx.sys;
  CheckDim(x, sys.model.n, "backup cbf");
  BcbfEvaluation eval;
  eval.backup_trace = PropagateSensitivity(sys.model, sys.backup, x, t, sys.backup_horizon, sys.dt,
                                           ctx.sensitivity_step);
  const auto& samples = eval.backup_trace.samples;

  double path_min = std::numeric_limits<double>::infinity();
  for (const auto& s : samples) path_min = std::min(path_min, sys.spec.margin_c(t + s.tau, s.state));
  const SensitivitySample& last = samples.back();
  eval.h_bcbf = std::min(sys.spec.margin_s0(t + last.tau, last.state), path_min);

  const State f = sys.model.drift(t, x);
  const InputMatrix g = sys.model.input_matrix(t, x);
  eval.collocation = CollocationIndices(sys.backup_horizon, sys.dt, ctx.n_collocation);
  eval.constraints.reserve(eval.collocation.size() + 1);
  for (int i : eval.collocation) {
    const SensitivitySample& s = samples[i];
    eval.constraints.push_back(
        BarrierRow(sys.spec.margin_c, sys.spec.rate, t + s.tau, s, f, g, ctx.grad_step));
  }
  eval.constraints.push_back(
      BarrierRow(sys.spec.margin_s0, sys.spec.rate, t + last.tau, last, f, g, ctx.grad_step));
  return eval;
}

std::vector<LinearConstraint> AssembleConstraints(const BackupCbfContext& ctx, double t,
                                                  const State& x) {
  return EvaluateBcbf(ctx, t, x).constraints;
}

bool BcbfInactive(const BackupCbfContext& ctx, const BcbfEvaluation& eval, double t,
                  const State& x) {
  const BackupSystem& sys = ctx.sys;
  if (sys.spec.MarginC(t, x) < -sys.spec.validity_margin) return false;
  const Input u_nom = Saturate(sys.model.bounds, sys.nominal(t, x));
  return std::all_of(eval.constraints.begin(), eval.constraints.end(),
                     [&](const LinearConstraint& row) {
                       return row.a.dot(u_nom) - row.b >= -ctx.qp_tol;
                     });
}

FilterDecision BcbfFilterStep(const BackupCbfContext& ctx, double t, const State& x) {
  const auto start = std::chrono::steady_clock::now();
  const BackupSystem& sys = ctx.sys;
  const BcbfEvaluation eval = EvaluateBcbf(ctx, t, x);

  QpProblem problem;
  problem.u_nom = Saturate(sys.model.bounds, sys.nominal(t, x));
  problem.constraints = eval.constraints;
  problem.bounds = sys.model.bounds;
  QpOptions options;
  options.tol = ctx.qp_tol;
  options.max_iter = ctx.qp_max_iter;
  const QpSolution sol = SolveQp(problem, options);

  FilterDecision d;
  d.h_bcbf = eval.h_bcbf;
  d.qp_status = sol.status;
  if (sol.status == QpStatus::kInfeasible) {
    d.input = Saturate(sys.model.bounds, sys.backup(t, x));
    d.source = DecisionSource::kBackup;
  } else {
    d.input = Saturate(sys.model.bounds, sol.u_star);
    const bool unchanged =
        ((sol.u_star - problem.u_nom).cwiseAbs().array() <= 10.0 * ctx.qp_tol).all();
    d.source = unchanged ? DecisionSource::kNominal : DecisionSource::kQp;
  }
  d.compute_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return d;
}

}  // namespace shield
