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

#ifndef SHIELD_BACKUP_CBF_H_
#define SHIELD_BACKUP_CBF_H_

#include <vector>

#include "shield/filter.h"
#include "shield/qp.h"
#include "shield/validity.h"

namespace shield {

struct BackupCbfContext {
  BackupSystem sys;
  // Evenly spaced points over [0, T_B], endpoints included; snapped to the
  // rollout grid.
  int n_collocation = 25;
  double qp_tol = 1e-8;
  int qp_max_iter = 200;
  // Central-difference step for margin gradients and time derivatives.
  double grad_step = 1e-5;
  // Relative step for the closed-loop Jacobian in the variational equation.
  double sensitivity_step = 1e-5;
};

struct BcbfEvaluation {
  double h_bcbf = 0.0;
  // Path rows at the collocation points, in time order, then the terminal row.
  std::vector<LinearConstraint> constraints;
  SensitivityTrace backup_trace;
  // Indices into backup_trace.samples of the collocation points.
  std::vector<int> collocation;
};

// Sample indices of the collocation points on a rollout of num_steps steps
// spanning [0, horizon].
std::vector<int> CollocationIndices(double horizon, double dt, int n_collocation);

// min(margin_S0 at phi_{T_B}(x), min over the backup rollout of margin_C).
// The path minimum covers every rollout sample, which includes the
// collocation points.
double EvalHBcbf(const BackupCbfContext& ctx, double t, const State& x);

// Rows a^T u >= b with a = (grad h(z_i)^T Q_i g(x))^T and
// b = -grad h(z_i)^T Q_i f(x) - dh/dt(z_i) - alpha(h(z_i)), using margin_C for
// the path rows and margin_S0 for the terminal row at tau = T_B.
BcbfEvaluation EvaluateBcbf(const BackupCbfContext& ctx, double t, const State& x);

std::vector<LinearConstraint> AssembleConstraints(const BackupCbfContext& ctx, double t,
                                                  const State& x);

// u_nom within U satisfies every row to qp_tol, and x is in C.
bool BcbfInactive(const BackupCbfContext& ctx, const BcbfEvaluation& eval, double t,
                  const State& x);

// The QP filter. An infeasible QP commits the saturated backup input.
FilterDecision BcbfFilterStep(const BackupCbfContext& ctx, double t, const State& x);

class BackupCbfFilter : public SafetyFilter {
 public:
  explicit BackupCbfFilter(BackupCbfContext ctx) : ctx_(std::move(ctx)) {}
  FilterDecision Decide(double t, const State& x) override { return BcbfFilterStep(ctx_, t, x); }
  std::string_view name() const override { return "bcbf"; }
  const BackupCbfContext& context() const { return ctx_; }

 private:
  BackupCbfContext ctx_;
};

}  // namespace shield

#endif  // SHIELD_BACKUP_CBF_H_
