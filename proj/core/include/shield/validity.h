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

#ifndef SHIELD_VALIDITY_H_
#define SHIELD_VALIDITY_H_

#include <optional>

#include "shield/dynamics.h"

namespace shield {

// Everything the backup-based filters share: the plant, the nominal and backup
// policies, the safety specification, the backup horizon T_B and the rollout
// step.
struct BackupSystem {
  ControlAffineModel model;
  Policy nominal;
  Policy backup;
  SafetySpec spec;
  double backup_horizon = 0.0;
  double dt = 0.01;
};

// Nominal rollout for T_S from (t_k, x_k), then backup rollout for T_B from
// the switch state. The switch state is shared by both segments.
struct CandidateTrajectory {
  State x_k;
  double t_k = 0.0;
  double switch_time = 0.0;
  double backup_horizon = 0.0;
  Trajectory nominal_segment;
  Trajectory backup_segment;
};

struct ValidityReport {
  double switch_time = 0.0;
  bool valid = false;
  // Minimum of margin_C over every examined sample of both segments.
  double min_margin_c = 0.0;
  // margin_S0 at the final sample; -inf when the rollout stopped early.
  double terminal_margin_s0 = 0.0;
  std::optional<double> first_violation_time;
};

CandidateTrajectory BuildCandidate(const BackupSystem& sys, const State& x_k, double t_k,
                                   double switch_time);

ValidityReport CheckValid(const CandidateTrajectory& candidate, const SafetySpec& spec);

// Streaming form of CheckValid(BuildCandidate(...)) that stores no
// trajectories. With stop_at_violation the rollout ends at the first sample
// with margin_C < -validity_margin; the verdict is unchanged but
// min_margin_c then only covers the samples examined.
ValidityReport EvaluateCandidate(const BackupSystem& sys, const State& x_k, double t_k,
                                 double switch_time, bool stop_at_violation = true);

// EvaluateCandidate with stop_at_violation that polls `cancel` after every
// sample and returns nullopt once it reports true.
std::optional<ValidityReport> EvaluateCandidateCancellable(const BackupSystem& sys,
                                                           const State& x_k, double t_k,
                                                           double switch_time,
                                                           const std::function<bool()>& cancel);

// x in S = R(T_B; S0): the pure-backup candidate from x is valid.
bool InRecoverableSet(const BackupSystem& sys, const State& x, double t);

}  // namespace shield

#endif  // SHIELD_VALIDITY_H_
