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

#include "shield/types.h"

#include <cmath>
#include <sstream>

namespace shield {
namespace {

template <typename Vec>
void CheckDimImpl(const Vec& v, int n, const char* what) {
  if (v.size() != n) {
    std::ostringstream os;
    os << what << ": expected dimension " << n << ", got " << v.size();
    throw DimensionError(os.str());
  }
}

}  // namespace

void CheckDim(const State& x, int n, const char* what) { CheckDimImpl(x, n, what); }
void CheckDim(const Input& u, int m, const char* what) { CheckDimImpl(u, m, what); }

InputBounds InputBounds::Box(const Input& lower, const Input& upper) {
  if (lower.size() != upper.size()) {
    throw DimensionError("InputBounds: lower and upper differ in dimension");
  }
  for (int i = 0; i < lower.size(); ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || lower[i] > upper[i]) {
      throw std::invalid_argument("InputBounds: need finite lower <= upper");
    }
  }
  InputBounds b;
  b.lower = lower;
  b.upper = upper;
  return b;
}

InputBounds InputBounds::Symmetric(int m, double limit) {
  return Box(Input::Constant(m, -limit), Input::Constant(m, limit));
}

InputBounds InputBounds::Norm(int m, double max_norm) {
  if (!(max_norm > 0.0) || !std::isfinite(max_norm)) {
    throw std::invalid_argument("InputBounds: norm bound must be positive");
  }
  InputBounds b = Symmetric(m, max_norm);
  b.max_norm = max_norm;
  return b;
}

bool InputBounds::Contains(const Input& u, double tol) const {
  if (u.size() != dim()) return false;
  for (int i = 0; i < u.size(); ++i) {
    if (u[i] < lower[i] - tol || u[i] > upper[i] + tol) return false;
  }
  return !has_norm() || u.norm() <= max_norm + tol;
}

ClassKRate::ClassKRate(double g) : gain(g) {
  if (!(g > 0.0) || !std::isfinite(g)) {
    throw std::invalid_argument("ClassKRate: gain must be positive and finite");
  }
}

double Alpha(const ClassKRate& rate, double h) { return rate.gain * h; }

double SafetySpec::MarginC(double t, const State& x) const {
  CheckDim(x, state_dim, "margin_C");
  return margin_c(t, x);
}

double SafetySpec::MarginS0(double t, const State& x) const {
  CheckDim(x, state_dim, "margin_S0");
  return margin_s0(t, x);
}

}  // namespace shield
