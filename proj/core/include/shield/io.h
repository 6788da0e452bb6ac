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

#ifndef SHIELD_IO_H_
#define SHIELD_IO_H_

#include <ostream>
#include <string>
#include <vector>

#include "shield/analysis.h"
#include "shield/scenarios.h"

namespace shield {

// Version of the CSV and JSON layouts written by the command-line tool.
inline constexpr const char* kSchemaVersion = "1.0";

std::vector<std::string> StateColumnNames(ScenarioConfig::World world);
std::vector<std::string> InputColumnNames(ScenarioConfig::World world);

// One row per monitor step: t, state..., input..., source, T_S_star, h_bcbf,
// min_margin_C, compute_ms. Absent optional values are empty fields.
void WriteTrajectoryCsv(std::ostream& out, const EpisodeLog& log, ScenarioConfig::World world);

// One row per grid point: x, y, vx, vy, in_S, in_S0, inactive_bcbf,
// inactive_mps, inactive_gk, h_bcbf.
void WriteSetsCsv(std::ostream& out, const SetSample& sample);

void WriteSweepCsv(std::ostream& out, const std::vector<SweepRow>& rows);

// Shortest decimal form that round-trips.
std::string FormatDouble(double v);

}  // namespace shield

#endif  // SHIELD_IO_H_
