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

// Acceptance suite: one PASS/FAIL line per primary criterion, followed by the
// measured values. Exits nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "shield/analysis.h"
#include "shield/backup_cbf.h"
#include "shield/dynamics.h"
#include "shield/qp.h"
#include "shield/scenarios.h"
#include "shield/thread_pool.h"
#include "test_util.h"

namespace shield {
namespace {

using testing::Vec4;

constexpr int kGrid = 101;
constexpr int kTrials = 5;

int failures = 0;
int collapse_grid_mismatch = -1;

void Report(const std::string& name, bool pass, const std::string& detail) {
  std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string Format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

double Seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

bool SameDecisions(const EpisodeLog& a, const EpisodeLog& b) {
  if (a.steps.size() != b.steps.size() || a.status != b.status) return false;
  for (size_t i = 0; i < a.steps.size(); ++i) {
    const StepRecord& x = a.steps[i];
    const StepRecord& y = b.steps[i];
    if (x.source != y.source || x.switch_time != y.switch_time || x.u != y.u || x.x != y.x) {
      return false;
    }
  }
  return true;
}

double MeanMs(const EpisodeLog& log) {
  double sum = 0.0;
  for (const StepRecord& r : log.steps) sum += r.compute_ms;
  return log.steps.empty() ? 0.0 : sum / log.steps.size();
}

// Runs every trial of `config` under `kind`.
std::vector<EpisodeLog> RunTrials(const Scenario& scenario, FilterKind kind,
                                  std::shared_ptr<ThreadPool> pool = nullptr) {
  std::vector<EpisodeLog> logs;
  auto filter = MakeFilter(scenario, kind, MonitorMode::kEveryStep, pool);
  for (int trial = 0; trial < kTrials; ++trial) {
    logs.push_back(RunEpisode(scenario, *filter, SampleInitialState(scenario.config, trial)));
  }
  return logs;
}

struct Aggregate {
  double nominal_fraction = 0.0;
  int goals = 0;
  int violations = 0;
  double mean_ms = 0.0;
};

Aggregate Summarize(const std::vector<EpisodeLog>& logs) {
  Aggregate a;
  for (const EpisodeLog& log : logs) {
    const Metrics m = ComputeMetrics(log);
    a.nominal_fraction += m.nominal_fraction / logs.size();
    a.goals += m.reached_goal;
    a.violations += m.violation;
    a.mean_ms += m.avg_compute_ms / logs.size();
  }
  return a;
}

// ---- set-level criteria ----------------------------------------------------

void SliceCriteria(ThreadPool& pool) {
  const Scenario scenario = BuildScenario(BuiltinScenario("di-slice"));
  auto start = std::chrono::steady_clock::now();
  const SetSample sample = SampleSets(scenario, kGrid, &pool);
  const TheoremReport t3 = VerifyTheorem3(sample);
  const double t3_seconds = Seconds(start);
  Report("theorem3", t3.pass && t3.violations.empty() && t3_seconds <= 300.0,
         Format("%d points, %zu violations, %.1f s", t3.points_tested, t3.violations.size(),
                t3_seconds));

  const TheoremReport t4 = VerifyTheorem4(sample, 0.05);
  const TheoremReport t4_zero = VerifyTheorem4(sample, 0.0);
  const bool zero_on_boundary = t4_zero.violations.size() == t4_zero.boundary_violations.size();
  Report("theorem4", t4.pass && t4.points_tested > 0 && zero_on_boundary,
         Format("epsilon 0.05: %d tested, %zu violations; epsilon 0: %zu violations, %zu within "
                "one cell of the I_BCBF boundary",
                t4.points_tested, t4.violations.size(), t4_zero.violations.size(),
                t4_zero.boundary_violations.size()));

  const double vm = scenario.sys.spec.validity_margin;
  int disagreements = 0;
  double worst_h = 0.0;
  for (size_t k = 0; k < sample.size(); ++k) {
    if ((sample.h_bcbf[k] >= 0.0) != static_cast<bool>(sample.in_s[k])) {
      ++disagreements;
      worst_h = std::max(worst_h, std::abs(sample.h_bcbf[k]));
    }
  }
  const double agreement = 1.0 - static_cast<double>(disagreements) / sample.size();
  Report("sign_consistency", agreement >= 0.999 && worst_h <= vm + 1e-3,
         Format("agreement %.4f%%, %d disagreements, max |h_bcbf| among them %.2e",
                100.0 * agreement, disagreements, worst_h));

  // Collapse on the grid: a single-candidate search is the MPS check.
  ScenarioConfig collapsed = scenario.config;
  collapsed.search_horizon = collapsed.monitor_dt;
  const SetSample one = SampleSets(BuildScenario(collapsed), kGrid, &pool);
  int grid_mismatch = 0;
  for (size_t k = 0; k < one.size(); ++k) grid_mismatch += one.inactive_gk[k] != one.inactive_mps[k];
  collapse_grid_mismatch = grid_mismatch;
}

// ---- component criteria ----------------------------------------------------

void SensitivityCriterion() {
  const double kp = 1.0;
  const double kd = 2.0;
  const ControlAffineModel di = testing::WideDoubleIntegrator();
  const Policy pd = testing::PdToOrigin(kp, kd);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> pos(-5.0, 5.0);
  std::normal_distribution<double> dir(0.0, 1.0);
  double taylor = 0.0;
  for (int i = 0; i < 100; ++i) {
    const State x = Vec4(pos(rng), pos(rng), pos(rng) / 2, pos(rng) / 2);
    State delta = Vec4(dir(rng), dir(rng), dir(rng), dir(rng));
    delta *= 1e-4 / delta.norm();
    const SensitivityTrace tr = PropagateSensitivity(di, pd, x, 0.0, 5.0, 0.01);
    const State moved = IntegrateFlow(di, pd, x + delta, 0.0, 5.0, 0.01).back();
    taylor = std::max(
        taylor, (moved - tr.samples.back().state - tr.samples.back().jacobian * delta).norm());
  }
  const Eigen::MatrixXd a = testing::PdClosedLoop(kp, kd);
  const SensitivityTrace tr = PropagateSensitivity(di, pd, Vec4(-3, 2, 2, 0), 0.0, 12.0, 0.01);
  double expm = 0.0;
  for (const SensitivitySample& s : tr.samples) {
    expm = std::max(
        expm, (Eigen::MatrixXd(s.jacobian) - testing::Expm(a * s.tau)).cwiseAbs().maxCoeff());
  }
  Report("sensitivity", taylor <= 1e-6 && expm <= 1e-6,
         Format("max Taylor residual %.2e over 100 pairs, max |Q - expm(A tau)| %.2e", taylor,
                expm));
}

void QpCriterion() {
  std::mt19937_64 rng(23);
  int vi_fail = 0;
  double worst_gap = -testing::kInf;
  for (int i = 0; i < 200; ++i) {
    const QpProblem p = testing::RandomFeasibleQp(rng, 2, 1 + i % 6);
    const QpSolution s = SolveQp(p);
    const double gap = testing::ProjectionViGap(rng, p, s.u_star, 200);
    worst_gap = std::max(worst_gap, gap);
    if (s.status != QpStatus::kOptimal || testing::QpSlack(p, s.u_star) < -1e-8 || gap > 1e-8) {
      ++vi_fail;
    }
  }
  int enum_fail = 0;
  for (int i = 0; i < 200; ++i) {
    const QpProblem p = testing::RandomFeasibleQp(rng, 2, 3);
    const QpSolution s = SolveQp(p);
    const auto oracle = testing::EnumeratedQp(p);
    if (!oracle || s.status != QpStatus::kOptimal || (*oracle - s.u_star).norm() > 1e-8) {
      ++enum_fail;
    }
  }
  Report("qp", vi_fail == 0 && enum_fail == 0,
         Format("%d/200 variational-inequality failures (max gap %.2e), %d/200 enumeration "
                "mismatches on 3-row problems",
                vi_fail, worst_gap, enum_fail));
}

// ---- closed-loop criteria --------------------------------------------------

void ClosedLoopCriteria() {
  const Scenario reach = BuildScenario(BuiltinScenario("reach-avoid"));
  const auto gk = RunTrials(reach, FilterKind::kGk);
  const auto mps = RunTrials(reach, FilterKind::kMps);
  const auto bcbf = RunTrials(reach, FilterKind::kBcbf);
  const Aggregate g = Summarize(gk);
  const Aggregate m = Summarize(mps);
  const Aggregate b = Summarize(bcbf);
  Report("reach_avoid",
         g.goals == kTrials && m.goals == 0 && b.goals == 0 &&
             g.nominal_fraction > m.nominal_fraction && m.nominal_fraction > b.nominal_fraction &&
             g.nominal_fraction >= 80.0 && g.nominal_fraction - m.nominal_fraction >= 15.0 &&
             g.violations + m.violations + b.violations == 0,
         Format("goals gk %d/%d mps %d/%d bcbf %d/%d; nominal %% gk %.1f mps %.1f bcbf %.1f; "
                "violations %d/%d/%d",
                g.goals, kTrials, m.goals, kTrials, b.goals, kTrials, g.nominal_fraction,
                m.nominal_fraction, b.nominal_fraction, g.violations, m.violations,
                b.violations));

  const Scenario highway = BuildScenario(BuiltinScenario("highway"));
  const auto hw_gk = RunTrials(highway, FilterKind::kGk);
  const auto hw_mps = RunTrials(highway, FilterKind::kMps);
  const auto hw_bcbf = RunTrials(highway, FilterKind::kBcbf);
  auto lanes = [&](const std::vector<EpisodeLog>& logs, bool& left, bool& changed) {
    left = changed = false;
    for (const EpisodeLog& log : logs) {
      const LaneUsage u = AnalyzeLanes(highway.config.highway, log);
      left |= u.left_nominal_lane;
      changed |= u.entered_backup_lane;
    }
  };
  bool gk_left, gk_changed, mps_left, mps_changed, bcbf_left, bcbf_changed;
  lanes(hw_gk, gk_left, gk_changed);
  lanes(hw_mps, mps_left, mps_changed);
  lanes(hw_bcbf, bcbf_left, bcbf_changed);
  const Aggregate hg = Summarize(hw_gk);
  const Aggregate hm = Summarize(hw_mps);
  const Aggregate hb = Summarize(hw_bcbf);
  Report("highway",
         hg.nominal_fraction == 100.0 && !gk_left && mps_changed && bcbf_changed &&
             hg.violations + hm.violations + hb.violations == 0,
         Format("nominal %% gk %.1f mps %.1f bcbf %.1f; gk left lane %s; backup lane change "
                "mps %s bcbf %s; violations %d/%d/%d",
                hg.nominal_fraction, hm.nominal_fraction, hb.nominal_fraction,
                gk_left ? "yes" : "no", mps_changed ? "yes" : "no", bcbf_changed ? "yes" : "no",
                hg.violations, hm.violations, hb.violations));

  // Parallel search on every gatekeeper run above.
  const int workers = std::max(4, DefaultWorkerCount());
  auto pool = std::make_shared<ThreadPool>(workers);
  const auto par = RunTrials(reach, FilterKind::kGkPar, pool);
  const auto hw_par = RunTrials(highway, FilterKind::kGkPar, pool);
  int mismatched = 0;
  for (int i = 0; i < kTrials; ++i) {
    mismatched += !SameDecisions(gk[i], par[i]);
    mismatched += !SameDecisions(hw_gk[i], hw_par[i]);
  }
  double seq_ms = 0.0;
  double par_ms = 0.0;
  for (int i = 0; i < kTrials; ++i) {
    seq_ms += MeanMs(gk[i]) / kTrials;
    par_ms += MeanMs(par[i]) / kTrials;
  }
  Report("parallel_equivalence", mismatched == 0,
         Format("%d of %d runs differ from the sequential search", mismatched, 2 * kTrials));
  Report("parallel_speedup", par_ms < seq_ms,
         Format("reach-avoid mean decision latency gk %.3f ms, gk-par (%d workers, %u hardware "
                "threads) %.3f ms",
                seq_ms, workers, std::thread::hardware_concurrency(), par_ms));

  // Collapse in closed loop: gatekeeper with T_H = dt against MPS.
  ScenarioConfig collapsed = reach.config;
  collapsed.search_horizon = collapsed.monitor_dt;
  const Scenario one = BuildScenario(collapsed);
  int steps = 0;
  int differing = 0;
  for (int trial = 0; trial < kTrials; ++trial) {
    const State x0 = SampleInitialState(collapsed, trial);
    auto gk_filter = MakeFilter(one, FilterKind::kGk);
    const EpisodeLog a = RunEpisode(one, *gk_filter, x0);
    const EpisodeLog& b = mps[trial];
    const size_t n = std::max(a.steps.size(), b.steps.size());
    steps += static_cast<int>(n);
    for (size_t k = 0; k < n; ++k) {
      if (k >= a.steps.size() || k >= b.steps.size() || a.steps[k].source != b.steps[k].source ||
          a.steps[k].u != b.steps[k].u || a.steps[k].x != b.steps[k].x) {
        ++differing;
      }
    }
  }
  Report("collapse_to_mps", collapse_grid_mismatch == 0 && differing == 0,
         Format("T_H = dt: %d of %d grid points with I_GK != I_MPS; %d of %d reach-avoid steps "
                "differ",
                collapse_grid_mismatch, kGrid * kGrid, differing, steps));
}

void BcbfInvarianceCriterion() {
  ScenarioConfig config = BuiltinScenario("di-slice");
  config.duration = 10.0;
  const Scenario scenario = BuildScenario(config);
  const BackupCbfContext ctx = scenario.Bcbf();
  const Box2& w = config.di_slice.window;
  std::mt19937_64 rng(29);
  const State lo = Vec4(w.x_min, w.y_min, -2.0, -2.0);
  const State hi = Vec4(w.x_max, w.y_max, 2.0, 2.0);
  auto filter = MakeFilter(scenario, FilterKind::kBcbf);
  const double vm = scenario.sys.spec.validity_margin;
  int runs = 0;
  int violated = 0;
  double worst = testing::kInf;
  while (runs < 50) {
    const State x0 = testing::UniformState(rng, lo, hi);
    if (EvalHBcbf(ctx, 0.0, x0) < 0.05) continue;
    ++runs;
    const EpisodeLog log = RunEpisode(scenario, *filter, x0);
    double low = testing::kInf;
    for (const StepRecord& r : log.steps) low = std::min(low, r.min_margin_c);
    worst = std::min(worst, low);
    violated += log.violation || low < -vm;
  }
  Report("bcbf_invariance", violated == 0,
         Format("%d of %d runs left C, min margin_C %.4f", violated, runs, worst));
}

}  // namespace
}  // namespace shield

int main() {
  using namespace shield;
  ThreadPool pool(DefaultWorkerCount());
  SliceCriteria(pool);
  SensitivityCriterion();
  QpCriterion();
  BcbfInvarianceCriterion();
  ClosedLoopCriteria();
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
