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

#include "shield/lyapunov.h"

#include <stdexcept>

namespace shield {

Eigen::MatrixXd SolveLyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || q.rows() != n || q.cols() != n) {
    throw std::invalid_argument("SolveLyapunov: A and Q must be square and of equal size");
  }
  // Column-major vec: vec(A^T P + P A) = (I kron A^T + A^T kron I) vec(P).
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index l = 0; l < n; ++l) {
        k(i + j * n, l + j * n) += a(l, i);
        k(i + j * n, i + l * n) += a(l, j);
      }
    }
  }
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(k);
  if (!lu.isInvertible()) throw std::runtime_error("SolveLyapunov: singular Lyapunov operator");
  const Eigen::MatrixXd rhs = -q;
  const Eigen::VectorXd p = lu.solve(Eigen::Map<const Eigen::VectorXd>(rhs.data(), n * n));
  const Eigen::MatrixXd pm = Eigen::Map<const Eigen::MatrixXd>(p.data(), n, n);
  return 0.5 * (pm + pm.transpose());
}

}  // namespace shield
