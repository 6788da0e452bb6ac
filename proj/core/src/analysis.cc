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

#include "shield/analysis.h"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace shield {
namespace {

void ForEach(ThreadPool* pool, int count, const std::function<void(int)>& body) {
  if (pool) {
    pool->ParallelFor(count, body);
  } else {
    for (int i = 0; i < count; ++i) body(i);
  }
}

double Fraction(const std::vector<std::uint8_t>& v) {
  if (v.empty()) return 0.0;
  return static_cast<double>(std::count(v.begin(), v.end(), 1)) / v.size();
}

// In-grid neighbors of index k; diagonal ones too when `diagonal`.
std::vector<int> Neighbors(int k, int res, bool diagonal) {
  const int i = k % res;
  const int j = k / res;
  std::vector<int> out;
  for (int dj = -1; dj <= 1; ++dj) {
    for (int di = -1; di <= 1; ++di) {
      if ((di == 0 && dj == 0) || (!diagonal && di != 0 && dj != 0)) continue;
      const int ii = i + di;
      const int jj = j + dj;
      if (ii < 0 || jj < 0 || ii >= res || jj >= res) continue;
      out.push_back(jj * res + ii);
    }
  }
  return out;
}

}  // namespace

SetSample SampleSets(const Scenario& scenario, int resolution, ThreadPool* pool) {
  const ScenarioConfig& c = scenario.config;
  SetSample s;
  s.window = c.di_slice.window;
  s.resolution = resolution;
  s.points = SliceGrid(c, resolution);
  const size_t n = s.points.size();
  s.in_s.assign(n, 0);
  s.in_s0.assign(n, 0);
  s.inactive_bcbf.assign(n, 0);
  s.inactive_mps.assign(n, 0);
  s.inactive_gk.assign(n, 0);
  s.h_bcbf.assign(n, 0.0);

  const InactiveContexts ctx = scenario.Inactive();
  const SafetySpec& spec = scenario.sys.spec;
  ForEach(pool, static_cast<int>(n), [&](int k) {
    const State& x = s.points[k];
    const double t = 0.0;
    s.in_s[k] = InRecoverableSet(scenario.sys, x, t);
    s.in_s0[k] = spec.MarginS0(t, x) >= 0.0;
    const BcbfEvaluation eval = EvaluateBcbf(ctx.bcbf, t, x);
    s.h_bcbf[k] = eval.h_bcbf;
    s.inactive_bcbf[k] = BcbfInactive(ctx.bcbf, eval, t, x);
    s.inactive_mps[k] = InactiveMembership(FilterMethod::kMps, ctx, t, x);
    s.inactive_gk[k] = InactiveMembership(FilterMethod::kGk, ctx, t, x);
  });
  return s;
}

SetFractions Fractions(const SetSample& sample) {
  return {Fraction(sample.in_s), Fraction(sample.in_s0), Fraction(sample.inactive_bcbf),
          Fraction(sample.inactive_mps), Fraction(sample.inactive_gk)};
}

TheoremReport VerifyTheorem3(const SetSample& sample) {
  TheoremReport r;
  r.theorem = 3;
  r.points_tested = static_cast<int>(sample.size());
  for (int k = 0; k < r.points_tested; ++k) {
    if (sample.inactive_mps[k] && !sample.inactive_gk[k]) r.violations.push_back(k);
  }
  r.pass = r.violations.empty();
  return r;
}

TheoremReport VerifyTheorem4(const SetSample& sample, double epsilon) {
  TheoremReport r;
  r.theorem = 4;
  r.epsilon = epsilon;
  const int res = sample.resolution;
  const int n = static_cast<int>(sample.size());
  for (int k = 0; k < n; ++k) {
    if (!sample.inactive_bcbf[k] || !(sample.h_bcbf[k] >= epsilon)) continue;
    bool interior = true;
    for (int nb : Neighbors(k, res, false)) {
      if (sample.in_s[nb] && !sample.inactive_bcbf[nb]) interior = false;
    }
    if (!interior) continue;
    ++r.points_tested;
    if (sample.inactive_gk[k]) continue;
    r.violations.push_back(k);
    for (int nb : Neighbors(k, res, true)) {
      if (!sample.inactive_bcbf[nb]) {
        r.boundary_violations.push_back(k);
        break;
      }
    }
  }
  r.pass = r.violations.empty();
  return r;
}

SignReport CheckSignConsistency(const SetSample& sample) {
  SignReport r;
  r.points = static_cast<int>(sample.size());
  for (int k = 0; k < r.points; ++k) {
    if ((sample.h_bcbf[k] >= 0.0) != static_cast<bool>(sample.in_s[k])) {
      ++r.disagreements;
      r.max_abs_h = std::max(r.max_abs_h, std::abs(sample.h_bcbf[k]));
    }
  }
  return r;
}

std::vector<SweepRow> SweepHorizon(const Scenario& scenario,
                                   const std::vector<double>& search_horizons,
                                   const std::vector<int>& resolutions, ThreadPool* pool) {
  std::vector<SweepRow> rows;
  for (int res : resolutions) {
    const std::vector<State> grid = SliceGrid(scenario.config, res);
    const int n = static_cast<int>(grid.size());
    std::vector<std::uint8_t> mps(n, 0);
    ShieldContext base = scenario.Shield();
    ForEach(pool, n, [&](int k) {
      mps[k] = EvaluateCandidate(base.sys, grid[k], 0.0, base.monitor_dt).valid;
    });
    for (double horizon : search_horizons) {
      ShieldContext ctx = base;
      ctx.search_horizon = horizon;
      ctx.GridSize();
      std::vector<std::uint8_t> gk(n, 0);
      std::vector<double> ms(n, 0.0);
      ForEach(pool, n, [&](int k) {
        const auto start = std::chrono::steady_clock::now();
        gk[k] = GkSearch(ctx, 0.0, grid[k]).switch_time > 0.0;
        ms[k] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                    .count();
      });
      SweepRow row;
      row.search_horizon = horizon;
      row.resolution = res;
      row.gk_fraction = Fraction(gk);
      row.mps_fraction = Fraction(mps);
      double total = 0.0;
      for (double v : ms) total += v;
      row.mean_search_ms = total / n;
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace shield
