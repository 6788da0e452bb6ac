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

#include "shield/io.h"

#include <charconv>
#include <cmath>

namespace shield {
namespace {

void WriteRow(std::ostream& out, const std::vector<std::string>& fields) {
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out << ',';
    out << fields[i];
  }
  out << '\n';
}

std::string Optional(const std::optional<double>& v) { return v ? FormatDouble(*v) : ""; }

}  // namespace

std::string FormatDouble(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> StateColumnNames(ScenarioConfig::World world) {
  if (world == ScenarioConfig::World::kHighway) {
    return {"px", "py", "yaw", "yaw_rate", "sideslip", "speed", "steer", "torque"};
  }
  return {"x", "y", "vx", "vy"};
}

std::vector<std::string> InputColumnNames(ScenarioConfig::World world) {
  if (world == ScenarioConfig::World::kHighway) return {"steer_rate", "torque_rate"};
  return {"ax", "ay"};
}

void WriteTrajectoryCsv(std::ostream& out, const EpisodeLog& log, ScenarioConfig::World world) {
  std::vector<std::string> header{"t"};
  for (const auto& s : StateColumnNames(world)) header.push_back(s);
  for (const auto& s : InputColumnNames(world)) header.push_back(s);
  for (const char* s : {"source", "T_S_star", "h_bcbf", "min_margin_C", "compute_ms"}) {
    header.emplace_back(s);
  }
  WriteRow(out, header);
  for (const StepRecord& r : log.steps) {
    std::vector<std::string> row{FormatDouble(r.t)};
    for (int i = 0; i < r.x.size(); ++i) row.push_back(FormatDouble(r.x[i]));
    for (int i = 0; i < r.u.size(); ++i) row.push_back(FormatDouble(r.u[i]));
    row.emplace_back(SourceName(r.source));
    row.push_back(Optional(r.switch_time));
    row.push_back(Optional(r.h_bcbf));
    row.push_back(FormatDouble(r.min_margin_c));
    row.push_back(FormatDouble(r.compute_ms));
    WriteRow(out, row);
  }
}

void WriteSetsCsv(std::ostream& out, const SetSample& sample) {
  WriteRow(out, {"x", "y", "vx", "vy", "in_S", "in_S0", "inactive_bcbf", "inactive_mps",
                 "inactive_gk", "h_bcbf"});
  for (size_t k = 0; k < sample.size(); ++k) {
    const State& p = sample.points[k];
    WriteRow(out, {FormatDouble(p[0]), FormatDouble(p[1]), FormatDouble(p[2]), FormatDouble(p[3]),
                   std::to_string(sample.in_s[k]), std::to_string(sample.in_s0[k]),
                   std::to_string(sample.inactive_bcbf[k]), std::to_string(sample.inactive_mps[k]),
                   std::to_string(sample.inactive_gk[k]), FormatDouble(sample.h_bcbf[k])});
  }
}

void WriteSweepCsv(std::ostream& out, const std::vector<SweepRow>& rows) {
  WriteRow(out, {"T_H", "resolution", "gk_fraction", "mps_fraction", "mean_search_ms"});
  for (const SweepRow& r : rows) {
    WriteRow(out, {FormatDouble(r.search_horizon), std::to_string(r.resolution),
                   FormatDouble(r.gk_fraction), FormatDouble(r.mps_fraction),
                   FormatDouble(r.mean_search_ms)});
  }
}

}  // namespace shield
