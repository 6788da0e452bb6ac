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

#ifndef SHIELD_FILTER_H_
#define SHIELD_FILTER_H_

#include <optional>
#include <string_view>
#include <vector>

#include "shield/qp.h"
#include "shield/validity.h"

namespace shield {

enum class DecisionSource { kNominal, kBackup, kQp };

std::string_view SourceName(DecisionSource source);

// What a safety filter commits at one monitor update.
struct FilterDecision {
  Input input;
  DecisionSource source = DecisionSource::kNominal;
  // Certified switching time T_S*; absent for Backup CBF.
  std::optional<double> switch_time;
  // Wall-clock decision latency. Not covered by any determinism guarantee.
  double compute_ms = 0.0;
  std::vector<ValidityReport> reports;
  // Backup CBF diagnostics.
  std::optional<double> h_bcbf;
  std::optional<QpStatus> qp_status;
};

// A map from the current (t, x) to a committed input. Implementations may
// carry monitor state between calls; Reset() clears it.
class SafetyFilter {
 public:
  virtual ~SafetyFilter() = default;
  virtual FilterDecision Decide(double t, const State& x) = 0;
  virtual void Reset() {}
  virtual std::string_view name() const = 0;
};

}  // namespace shield

#endif  // SHIELD_FILTER_H_
