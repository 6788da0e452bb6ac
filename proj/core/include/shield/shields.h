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

#ifndef SHIELD_SHIELDS_H_
#define SHIELD_SHIELDS_H_

#include <limits>
#include <memory>
#include <vector>

#include "shield/backup_cbf.h"
#include "shield/filter.h"
#include "shield/thread_pool.h"
#include "shield/validity.h"

namespace shield {

// How the gatekeeper monitor decides when to re-run the switching-time search.
enum class MonitorMode {
  kEveryStep,    // search at every update
  kCertificate,  // search only when the stored certificate runs out
};

struct ShieldContext {
  ShieldContext() = default;
  ShieldContext(BackupSystem sys_in, double monitor_dt_in, double search_horizon_in);

  BackupSystem sys;
  double monitor_dt = 0.05;
  double search_horizon = 0.0;

  // N_H with T_H = N_H * monitor_dt; throws unless 0 < monitor_dt <= T_H and
  // T_H is an integer multiple of monitor_dt.
  int GridSize() const;
  double SwitchTime(int j) const { return j * monitor_dt; }
};

struct MonitorState {
  double certified_switch_time = 0.0;
  double last_search_time = -std::numeric_limits<double>::infinity();
};

struct SearchResult {
  double switch_time = 0.0;
  // Validity reports for every switching time examined, largest first, down
  // to and including the selected one.
  std::vector<ValidityReport> reports;
};

// MPS: a single candidate with T_S = monitor_dt.
FilterDecision MpsStep(const ShieldContext& ctx, double t, const State& x);

// Sequential scan T_S = T_H, T_H - dt, ..., 0; returns the first valid one.
// A valid T_S = 0 is reported but never certifies nominal execution.
SearchResult GkSearch(const ShieldContext& ctx, double t, const State& x);

struct ParallelSearchOptions {
  // Skip (and abort) candidates below a switching time already found valid.
  // They cannot change the maximum, so the result is the same either way.
  bool prune = true;
};

// Evaluates the grid candidates concurrently on `pool` and reduces to the
// largest valid switching time. Identical to GkSearch for every input.
SearchResult GkSearchParallel(const ShieldContext& ctx, double t, const State& x,
                              ThreadPool& pool, const ParallelSearchOptions& options = {});

// Whether the monitor re-runs the search at this update.
bool UpdateTriggered(MonitorMode mode, const MonitorState& monitor, double monitor_dt);

using Searcher = std::function<SearchResult(const ShieldContext&, double, const State&)>;

// One gatekeeper monitor update: either replace the certificate with a fresh
// search or decrement it by monitor_dt, then commit nominal iff the
// certificate is positive.
FilterDecision GkStep(const ShieldContext& ctx, MonitorState& monitor, double t, const State& x,
                      bool triggered, const Searcher& search);

enum class FilterMethod { kBcbf, kMps, kGk };

// Shared inputs of the three inactive-set predicates.
struct InactiveContexts {
  ShieldContext shield;
  BackupCbfContext bcbf;
};

bool InactiveMembership(FilterMethod method, const InactiveContexts& ctx, double t,
                        const State& x);

class MpsFilter : public SafetyFilter {
 public:
  explicit MpsFilter(ShieldContext ctx) : ctx_(std::move(ctx)) {}
  FilterDecision Decide(double t, const State& x) override { return MpsStep(ctx_, t, x); }
  std::string_view name() const override { return "mps"; }

 private:
  ShieldContext ctx_;
};

class GatekeeperFilter : public SafetyFilter {
 public:
  // A null pool selects the sequential search.
  GatekeeperFilter(ShieldContext ctx, MonitorMode mode, std::shared_ptr<ThreadPool> pool = nullptr);
  FilterDecision Decide(double t, const State& x) override;
  void Reset() override { monitor_ = {}; }
  std::string_view name() const override { return pool_ ? "gk-par" : "gk"; }
  const MonitorState& monitor() const { return monitor_; }

 private:
  ShieldContext ctx_;
  MonitorMode mode_;
  std::shared_ptr<ThreadPool> pool_;
  MonitorState monitor_;
};

}  // namespace shield

#endif  // SHIELD_SHIELDS_H_
