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

#include "shield/shields.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace shield {
namespace {

using Clock = std::chrono::steady_clock;

double ElapsedMs(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

FilterDecision Commit(const ShieldContext& ctx, double t, const State& x, double certified) {
  const BackupSystem& sys = ctx.sys;
  FilterDecision d;
  d.switch_time = certified;
  if (certified > 0.0) {
    d.input = Saturate(sys.model.bounds, sys.nominal(t, x));
    d.source = DecisionSource::kNominal;
  } else {
    d.input = Saturate(sys.model.bounds, sys.backup(t, x));
    d.source = DecisionSource::kBackup;
  }
  return d;
}

}  // namespace

ShieldContext::ShieldContext(BackupSystem sys_in, double monitor_dt_in, double search_horizon_in)
    : sys(std::move(sys_in)), monitor_dt(monitor_dt_in), search_horizon(search_horizon_in) {}

int ShieldContext::GridSize() const {
  if (!(monitor_dt > 0.0) || !(monitor_dt <= search_horizon * (1.0 + 1e-12))) {
    throw std::invalid_argument("shield: need 0 < monitor_dt <= search_horizon");
  }
  const double ratio = search_horizon / monitor_dt;
  const double n = std::round(ratio);
  if (std::abs(ratio - n) > 1e-9 * std::max(1.0, ratio)) {
    throw std::invalid_argument("shield: search_horizon must be a multiple of monitor_dt");
  }
  return static_cast<int>(n);
}

FilterDecision MpsStep(const ShieldContext& ctx, double t, const State& x) {
  const auto start = Clock::now();
  CheckDim(x, ctx.sys.model.n, "mps");
  ValidityReport report = EvaluateCandidate(ctx.sys, x, t, ctx.monitor_dt);
  FilterDecision d = Commit(ctx, t, x, report.valid ? ctx.monitor_dt : 0.0);
  d.reports.push_back(std::move(report));
  d.compute_ms = ElapsedMs(start);
  return d;
}

SearchResult GkSearch(const ShieldContext& ctx, double t, const State& x) {
  CheckDim(x, ctx.sys.model.n, "gatekeeper");
  SearchResult result;
  for (int j = ctx.GridSize(); j >= 0; --j) {
    result.reports.push_back(EvaluateCandidate(ctx.sys, x, t, ctx.SwitchTime(j)));
    if (result.reports.back().valid) {
      result.switch_time = ctx.SwitchTime(j);
      break;
    }
  }
  return result;
}

SearchResult GkSearchParallel(const ShieldContext& ctx, double t, const State& x, ThreadPool& pool,
                              const ParallelSearchOptions& options) {
  CheckDim(x, ctx.sys.model.n, "gatekeeper");
  const int n_h = ctx.GridSize();
  std::vector<std::optional<ValidityReport>> slots(n_h + 1);
  std::atomic<int> best{-1};

  // Work item i evaluates j = n_h - i, so the longest candidates start first.
  pool.ParallelFor(n_h + 1, [&](int i) {
    const int j = n_h - i;
    if (options.prune && best.load(std::memory_order_relaxed) > j) return;
    std::optional<ValidityReport> report;
    if (options.prune) {
      report = EvaluateCandidateCancellable(ctx.sys, x, t, ctx.SwitchTime(j), [&] {
        return best.load(std::memory_order_relaxed) > j;
      });
      if (!report) return;
    } else {
      report = EvaluateCandidate(ctx.sys, x, t, ctx.SwitchTime(j));
    }
    if (report->valid) {
      int seen = best.load();
      while (seen < j && !best.compare_exchange_weak(seen, j)) {
      }
    }
    slots[j] = std::move(report);
  });

  // Candidates above the winner are never pruned, so the report list matches
  // the sequential scan.
  SearchResult result;
  const int winner = best.load();
  const int lowest = std::max(winner, 0);
  for (int j = n_h; j >= lowest; --j) result.reports.push_back(*slots[j]);
  if (winner >= 0) result.switch_time = ctx.SwitchTime(winner);
  return result;
}

bool UpdateTriggered(MonitorMode mode, const MonitorState& monitor, double monitor_dt) {
  if (mode == MonitorMode::kEveryStep) return true;
  // Relative slack absorbs the residue left by repeated decrements.
  return !std::isfinite(monitor.last_search_time) ||
         monitor.certified_switch_time <= monitor_dt * (1.0 + 1e-9);
}

FilterDecision GkStep(const ShieldContext& ctx, MonitorState& monitor, double t, const State& x,
                      bool triggered, const Searcher& search) {
  const auto start = Clock::now();
  std::vector<ValidityReport> reports;
  if (triggered) {
    SearchResult result = search(ctx, t, x);
    monitor.certified_switch_time = result.switch_time;
    monitor.last_search_time = t;
    reports = std::move(result.reports);
  } else {
    monitor.certified_switch_time = std::max(monitor.certified_switch_time - ctx.monitor_dt, 0.0);
    // Guard against a residue like 1e-17 surviving repeated subtraction.
    if (monitor.certified_switch_time < 1e-9 * ctx.monitor_dt) monitor.certified_switch_time = 0.0;
  }
  FilterDecision d = Commit(ctx, t, x, monitor.certified_switch_time);
  d.reports = std::move(reports);
  d.compute_ms = ElapsedMs(start);
  return d;
}

bool InactiveMembership(FilterMethod method, const InactiveContexts& ctx, double t,
                        const State& x) {
  switch (method) {
    case FilterMethod::kBcbf:
      return BcbfInactive(ctx.bcbf, EvaluateBcbf(ctx.bcbf, t, x), t, x);
    case FilterMethod::kMps:
      return EvaluateCandidate(ctx.shield.sys, x, t, ctx.shield.monitor_dt).valid;
    case FilterMethod::kGk:
      return GkSearch(ctx.shield, t, x).switch_time > 0.0;
  }
  return false;
}

GatekeeperFilter::GatekeeperFilter(ShieldContext ctx, MonitorMode mode,
                                   std::shared_ptr<ThreadPool> pool)
    : ctx_(std::move(ctx)), mode_(mode), pool_(std::move(pool)) {
  ctx_.GridSize();
}

FilterDecision GatekeeperFilter::Decide(double t, const State& x) {
  const bool triggered = UpdateTriggered(mode_, monitor_, ctx_.monitor_dt);
  if (pool_) {
    ThreadPool& pool = *pool_;
    return GkStep(ctx_, monitor_, t, x, triggered,
                  [&pool](const ShieldContext& c, double tk, const State& xk) {
                    return GkSearchParallel(c, tk, xk, pool);
                  });
  }
  return GkStep(ctx_, monitor_, t, x, triggered, GkSearch);
}

}  // namespace shield
