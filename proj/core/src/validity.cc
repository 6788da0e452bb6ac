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

#include "shield/validity.h"

#include <algorithm>
#include <limits>

namespace shield {
namespace {

class MarginTracker {
 public:
  MarginTracker(const SafetySpec& spec) : spec_(spec) {}

  // Returns false at the first violating sample.
  bool Add(double t, const State& x) {
    const double h = spec_.MarginC(t, x);
    min_ = std::min(min_, h);
    if (h < -spec_.validity_margin && !first_violation_) {
      first_violation_ = t;
      return false;
    }
    return true;
  }

  ValidityReport Finish(double switch_time, double terminal) const {
    ValidityReport report;
    report.switch_time = switch_time;
    report.min_margin_c = min_;
    report.terminal_margin_s0 = terminal;
    report.first_violation_time = first_violation_;
    report.valid = min_ >= -spec_.validity_margin && terminal >= -spec_.validity_margin;
    return report;
  }

 private:
  const SafetySpec& spec_;
  double min_ = std::numeric_limits<double>::infinity();
  std::optional<double> first_violation_;
};

void CheckHorizons(double switch_time, double backup_horizon) {
  if (!(switch_time >= 0.0) || !(backup_horizon >= 0.0)) {
    throw std::invalid_argument("candidate: T_S and T_B must be nonnegative");
  }
}

}  // namespace

CandidateTrajectory BuildCandidate(const BackupSystem& sys, const State& x_k, double t_k,
                                   double switch_time) {
  CheckHorizons(switch_time, sys.backup_horizon);
  CandidateTrajectory c;
  c.x_k = x_k;
  c.t_k = t_k;
  c.switch_time = switch_time;
  c.backup_horizon = sys.backup_horizon;
  c.nominal_segment = IntegrateFlow(sys.model, sys.nominal, x_k, t_k, switch_time, sys.dt);
  c.backup_segment = IntegrateFlow(sys.model, sys.backup, c.nominal_segment.back(),
                                   c.nominal_segment.times.back(), sys.backup_horizon, sys.dt);
  return c;
}

ValidityReport CheckValid(const CandidateTrajectory& candidate, const SafetySpec& spec) {
  MarginTracker tracker(spec);
  for (const Trajectory* seg : {&candidate.nominal_segment, &candidate.backup_segment}) {
    for (size_t i = 0; i < seg->states.size(); ++i) tracker.Add(seg->times[i], seg->states[i]);
  }
  const Trajectory& last = candidate.backup_segment;
  return tracker.Finish(candidate.switch_time, spec.MarginS0(last.times.back(), last.back()));
}

namespace {

template <typename Cancel>
std::optional<ValidityReport> EvaluateImpl(const BackupSystem& sys, const State& x_k, double t_k,
                                           double switch_time, bool stop_at_violation,
                                           const Cancel& cancel) {
  CheckHorizons(switch_time, sys.backup_horizon);
  MarginTracker tracker(sys.spec);
  bool alive = true;
  bool cancelled = false;
  State switch_state = x_k;
  double switch_t = t_k;
  auto visit_into = [&](State& last, double& last_t) {
    return [&](int, double t, const State& x) {
      alive = tracker.Add(t, x) || !stop_at_violation;
      last = x;
      last_t = t;
      if (cancel()) {
        cancelled = true;
        return false;
      }
      return alive;
    };
  };
  Rollout(sys.model, sys.nominal, x_k, t_k, switch_time, sys.dt,
          visit_into(switch_state, switch_t));
  if (cancelled) return std::nullopt;
  if (!alive) return tracker.Finish(switch_time, -std::numeric_limits<double>::infinity());
  State terminal = switch_state;
  double terminal_t = switch_t;
  Rollout(sys.model, sys.backup, switch_state, switch_t, sys.backup_horizon, sys.dt,
          visit_into(terminal, terminal_t));
  if (cancelled) return std::nullopt;
  if (!alive) return tracker.Finish(switch_time, -std::numeric_limits<double>::infinity());
  return tracker.Finish(switch_time, sys.spec.MarginS0(terminal_t, terminal));
}

}  // namespace

ValidityReport EvaluateCandidate(const BackupSystem& sys, const State& x_k, double t_k,
                                 double switch_time, bool stop_at_violation) {
  return *EvaluateImpl(sys, x_k, t_k, switch_time, stop_at_violation, [] { return false; });
}

std::optional<ValidityReport> EvaluateCandidateCancellable(const BackupSystem& sys,
                                                           const State& x_k, double t_k,
                                                           double switch_time,
                                                           const std::function<bool()>& cancel) {
  return EvaluateImpl(sys, x_k, t_k, switch_time, true, cancel);
}

bool InRecoverableSet(const BackupSystem& sys, const State& x, double t) {
  return EvaluateCandidate(sys, x, t, 0.0).valid;
}

}  // namespace shield
