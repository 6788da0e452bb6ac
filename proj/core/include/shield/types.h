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

#ifndef SHIELD_TYPES_H_
#define SHIELD_TYPES_H_

#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace shield {

// Upper bounds on the dimensions of any model in this library. Vectors are
// dynamically sized but stack allocated, so rollouts never touch the heap.
inline constexpr int kMaxStateDim = 8;
inline constexpr int kMaxInputDim = 4;

using State = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxStateDim, 1>;
using Input = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxInputDim, 1>;
using StateMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0,
                                  kMaxStateDim, kMaxStateDim>;
using InputMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0,
                                  kMaxStateDim, kMaxInputDim>;
using RowInput = Eigen::Matrix<double, 1, Eigen::Dynamic, Eigen::RowMajor, 1,
                               kMaxInputDim>;

// Thrown when a vector does not have the dimension its consumer expects.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Thrown when a rollout produces a non-finite state.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, int step)
      : std::runtime_error(what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

void CheckDim(const State& x, int n, const char* what);
void CheckDim(const Input& u, int m, const char* what);

// Admissible input set U: a box, optionally intersected with a Euclidean ball.
struct InputBounds {
  Input lower;
  Input upper;
  // Infinite when there is no norm constraint.
  double max_norm = std::numeric_limits<double>::infinity();

  static InputBounds Box(const Input& lower, const Input& upper);
  static InputBounds Symmetric(int m, double limit);
  static InputBounds Norm(int m, double max_norm);

  int dim() const { return static_cast<int>(lower.size()); }
  bool has_norm() const { return max_norm < std::numeric_limits<double>::infinity(); }
  // True when u lies in U up to tol.
  bool Contains(const Input& u, double tol = 0.0) const;
};

// Linear class-K function alpha(h) = gain * h.
struct ClassKRate {
  explicit ClassKRate(double gain = 1.0);
  double gain;
};

double Alpha(const ClassKRate& rate, double h);

// Signed margin function (t, x) -> h. Nonnegative exactly on the set.
using MarginFn = std::function<double(double, const State&)>;

// The safe set C(t), the terminal set S0 and the barrier rate shared by every
// filter. Both margin functions must be pure.
struct SafetySpec {
  int state_dim = 0;
  MarginFn margin_c;
  MarginFn margin_s0;
  ClassKRate rate{1.0};
  // Slack subtracted before sign tests; absorbs sampling error at boundaries.
  double validity_margin = 0.0;

  double MarginC(double t, const State& x) const;
  double MarginS0(double t, const State& x) const;
};

}  // namespace shield

#endif  // SHIELD_TYPES_H_
