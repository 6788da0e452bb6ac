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

#ifndef SHIELD_ANALYSIS_H_
#define SHIELD_ANALYSIS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "shield/scenarios.h"

namespace shield {

// Memberships of every point of a slice grid, in grid order (x fastest).
struct SetSample {
  Box2 window;
  int resolution = 0;
  std::vector<State> points;
  std::vector<std::uint8_t> in_s;
  std::vector<std::uint8_t> in_s0;
  std::vector<std::uint8_t> inactive_bcbf;
  std::vector<std::uint8_t> inactive_mps;
  std::vector<std::uint8_t> inactive_gk;
  std::vector<double> h_bcbf;

  size_t size() const { return points.size(); }
};

// Evaluates S, S0 and the three inactive sets on the slice grid of a static
// scenario. Points are distributed over `pool` when given; the result does
// not depend on the worker count.
SetSample SampleSets(const Scenario& scenario, int resolution, ThreadPool* pool = nullptr);

struct SetFractions {
  double s = 0.0;
  double s0 = 0.0;
  double bcbf = 0.0;
  double mps = 0.0;
  double gk = 0.0;
};

SetFractions Fractions(const SetSample& sample);

struct TheoremReport {
  int theorem = 3;
  double epsilon = 0.0;  // interior margin, theorem 4 only
  int points_tested = 0;
  std::vector<int> violations;  // grid indices
  // Theorem 4: violations with a grid neighbor (8-connectivity) outside the
  // sampled I_BCBF, i.e. within one cell of its boundary.
  std::vector<int> boundary_violations;
  bool pass = false;
};

// Points accepted by MPS but not by gatekeeper.
TheoremReport VerifyTheorem3(const SetSample& sample);

// Test points: bcbf-inactive, h_bcbf >= epsilon, and every 4-neighbor that
// lies in S is bcbf-inactive. Violations are test points outside I_GK.
TheoremReport VerifyTheorem4(const SetSample& sample, double epsilon);

// Sign consistency of h_bcbf with membership in S.
struct SignReport {
  int points = 0;
  int disagreements = 0;
  // Largest |h_bcbf| among disagreeing points.
  double max_abs_h = 0.0;
};

SignReport CheckSignConsistency(const SetSample& sample);

struct SweepRow {
  double search_horizon = 0.0;
  int resolution = 0;
  double gk_fraction = 0.0;
  double mps_fraction = 0.0;
  double mean_search_ms = 0.0;
};

// I_GK and I_MPS fractions and mean sequential search time per grid point for
// every (T_H, resolution) pair.
std::vector<SweepRow> SweepHorizon(const Scenario& scenario,
                                   const std::vector<double>& search_horizons,
                                   const std::vector<int>& resolutions, ThreadPool* pool = nullptr);

}  // namespace shield

#endif  // SHIELD_ANALYSIS_H_
