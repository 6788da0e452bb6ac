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

#include "shield/qp.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace shield {
namespace {

using Dense = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<LinearConstraint> Deduplicate(const std::vector<LinearConstraint>& rows) {
  std::vector<LinearConstraint> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    const bool seen = std::any_of(out.begin(), out.end(), [&](const LinearConstraint& o) {
      return o.b == row.b && o.a == row.a;
    });
    if (!seen) out.push_back(row);
  }
  return out;
}

double Residual(const Vec& u, const Vec& u_nom, const std::vector<LinearConstraint>& rows,
                const std::vector<int>& active, const std::vector<double>& lambda) {
  Vec stationarity = u - u_nom;
  for (size_t i = 0; i < active.size(); ++i) {
    stationarity -= lambda[i] * Vec(rows[active[i]].a);
  }
  double res = stationarity.cwiseAbs().maxCoeff();
  for (const auto& row : rows) res = std::max(res, row.b - Vec(row.a).dot(u));
  return std::max(res, 0.0);
}

}  // namespace

const char* QpStatusName(QpStatus status) {
  switch (status) {
    case QpStatus::kOptimal:
      return "optimal";
    case QpStatus::kInfeasible:
      return "infeasible";
    case QpStatus::kMaxIter:
      return "max_iter";
  }
  return "unknown";
}

std::vector<LinearConstraint> BoundRows(const InputBounds& bounds, int norm_facets) {
  const int m = bounds.dim();
  std::vector<LinearConstraint> rows;
  for (int i = 0; i < m; ++i) {
    Input e = Input::Zero(m);
    e[i] = 1.0;
    rows.push_back({e, bounds.lower[i]});
    rows.push_back({-e, -bounds.upper[i]});
  }
  if (bounds.has_norm()) {
    if (m != 2) throw std::invalid_argument("BoundRows: norm bounds need a 2-D input");
    const double offset = bounds.max_norm * std::cos(std::numbers::pi / norm_facets);
    for (int k = 0; k < norm_facets; ++k) {
      const double theta = 2.0 * std::numbers::pi * k / norm_facets;
      Input n(2);
      n << -std::cos(theta), -std::sin(theta);
      rows.push_back({n, -offset});
    }
  }
  return rows;
}

QpSolution SolveQp(const QpProblem& problem, const QpOptions& options) {
  if (!(options.tol > 0.0)) throw std::invalid_argument("SolveQp: tol must be positive");
  const int m = static_cast<int>(problem.u_nom.size());
  if (m < 1) throw DimensionError("SolveQp: empty input");
  CheckDim(problem.bounds.lower, m, "SolveQp bounds");

  std::vector<LinearConstraint> all = problem.constraints;
  for (const auto& row : all) {
    CheckDim(row.a, m, "SolveQp row");
    if (!row.a.allFinite() || !std::isfinite(row.b)) {
      throw std::invalid_argument("SolveQp: non-finite constraint row");
    }
  }
  for (auto& row : BoundRows(problem.bounds, options.norm_facets)) all.push_back(std::move(row));
  const std::vector<LinearConstraint> rows = Deduplicate(all);
  const int num_rows = static_cast<int>(rows.size());

  const Vec u_nom = problem.u_nom;
  Vec u = u_nom;
  std::vector<int> active;
  std::vector<double> lambda;
  int iterations = 0;

  auto slack = [&](int j) { return Vec(rows[j].a).dot(u) - rows[j].b; };
  auto finish = [&](QpStatus status) {
    QpSolution sol;
    sol.u_star = u;
    sol.status = status;
    sol.iterations = iterations;
    sol.kkt_residual = Residual(u, u_nom, rows, active, lambda);
    return sol;
  };

  while (true) {
    // Most violated constraint.
    int p = -1;
    double worst = -options.tol;
    for (int j = 0; j < num_rows; ++j) {
      if (std::find(active.begin(), active.end(), j) != active.end()) continue;
      const double s = slack(j);
      if (s < worst) {
        worst = s;
        p = j;
      }
    }
    if (p < 0) return finish(QpStatus::kOptimal);

    const Vec n_p = rows[p].a;
    double lambda_p = 0.0;
    while (true) {
      if (++iterations > options.max_iter) return finish(QpStatus::kMaxIter);
      const int q = static_cast<int>(active.size());
      Vec r(q);
      Vec z = n_p;
      if (q > 0) {
        Dense n_act(m, q);
        for (int i = 0; i < q; ++i) n_act.col(i) = Vec(rows[active[i]].a);
        r = (n_act.transpose() * n_act).ldlt().solve(n_act.transpose() * n_p);
        z = n_p - n_act * r;
      }
      // Largest dual step that keeps the active multipliers nonnegative.
      double t_partial = kInf;
      int drop = -1;
      for (int i = 0; i < q; ++i) {
        if (r[i] > 1e-12) {
          const double ratio = lambda[i] / r[i];
          if (ratio < t_partial) {
            t_partial = ratio;
            drop = i;
          }
        }
      }
      const double zz = z.dot(n_p);
      const double t_full = zz > 1e-14 * n_p.squaredNorm() ? -slack(p) / zz : kInf;
      const double t = std::min(t_partial, t_full);
      if (t == kInf) return finish(QpStatus::kInfeasible);

      if (t_full < kInf) u += t * z;
      for (int i = 0; i < q; ++i) lambda[i] -= t * r[i];
      lambda_p += t;
      if (t_full <= t_partial) {
        active.push_back(p);
        lambda.push_back(lambda_p);
        break;
      }
      active.erase(active.begin() + drop);
      lambda.erase(lambda.begin() + drop);
    }
  }
}

}  // namespace shield
