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

#ifndef SHIELD_LYAPUNOV_H_
#define SHIELD_LYAPUNOV_H_

#include <Eigen/Dense>

namespace shield {

// Solves A^T P + P A = -Q for symmetric P by vectorization. Intended for the
// small systems used to shape terminal sets. Throws std::invalid_argument for
// non-square or mismatched inputs and std::runtime_error when A has
// eigenvalues summing to zero (no unique solution).
Eigen::MatrixXd SolveLyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q);

}  // namespace shield

#endif  // SHIELD_LYAPUNOV_H_
