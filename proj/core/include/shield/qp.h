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

#ifndef SHIELD_QP_H_
#define SHIELD_QP_H_

#include <vector>

#include "shield/types.h"

namespace shield {

// One linear inequality a^T u >= b.
struct LinearConstraint {
  Input a;
  double b = 0.0;
};

// minimize ||u - u_nom||^2 subject to the rows and u in `bounds`.
struct QpProblem {
  Input u_nom;
  std::vector<LinearConstraint> constraints;
  InputBounds bounds;
};

enum class QpStatus { kOptimal, kInfeasible, kMaxIter };

const char* QpStatusName(QpStatus status);

struct QpSolution {
  Input u_star;
  QpStatus status = QpStatus::kOptimal;
  // max(primal violation, stationarity residual) at u_star.
  double kkt_residual = 0.0;
  int iterations = 0;
};

struct QpOptions {
  double tol = 1e-8;
  int max_iter = 200;
  // Facets of the inscribed polygon that stands in for a norm bound.
  int norm_facets = 32;
};

// Expands the admissible set into inequality rows: two per box coordinate,
// plus an inscribed polygon when the bounds carry a norm constraint.
std::vector<LinearConstraint> BoundRows(const InputBounds& bounds, int norm_facets);

// Dual active-set (Goldfarb-Idnani) method specialized to the identity
// Hessian. Starts from the unconstrained minimizer u_nom, so a feasible u_nom
// is returned unchanged. Exact duplicate rows are removed first.
QpSolution SolveQp(const QpProblem& problem, const QpOptions& options = {});

}  // namespace shield

#endif  // SHIELD_QP_H_
