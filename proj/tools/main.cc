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

// Command-line harness: episodes, set sampling, theorem checks, horizon
// sweeps and latency benchmarks. Exit codes: 0 ok, 2 configuration error,
// 3 simulation divergence, 4 theorem violation.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "shield/analysis.h"
#include "shield/io.h"
#include "shield/scenarios.h"

#ifndef SHIELD_VERSION
#define SHIELD_VERSION "0.1.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace shield;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitViolation = 4;

std::string UtcNow() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

json Nullable(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json StateJson(const State& x) {
  json a = json::array();
  for (int i = 0; i < x.size(); ++i) a.push_back(x[i]);
  return a;
}

void WriteFile(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

// Holds the manifest fields common to every command.
struct Invocation {
  std::string command;
  std::vector<std::string> argv;
  std::string scenario;
  std::optional<std::uint64_t> seed;
  fs::path out;
  int workers = 1;
  std::string started_at;
  std::chrono::steady_clock::time_point start;

  void WriteManifest(const json& extra = json::object()) const {
    json m;
    m["schema_version"] = kSchemaVersion;
    m["version"] = SHIELD_VERSION;
    m["command"] = command;
    m["argv"] = argv;
    m["scenario"] = scenario;
    m["seed"] = seed ? json(*seed) : json(nullptr);
    m["out"] = out.string();
    m["workers"] = workers;
    m["started_at"] = started_at;
    m["finished_at"] = UtcNow();
    m["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
    WriteFile(out / "manifest.json", m.dump(2) + "\n");
  }
};

json MetricsJson(const Metrics& m) {
  return {{"nominal_fraction", m.nominal_fraction},
          {"avg_T_S_star", Nullable(m.avg_switch_time)},
          {"reached_goal", m.reached_goal},
          {"avg_compute_ms", m.avg_compute_ms},
          {"steps", m.steps},
          {"violation", m.violation},
          {"min_margin_C", m.min_margin_c}};
}

int ResolveWorkers(int requested) { return requested > 0 ? requested : DefaultWorkerCount(); }

MonitorMode ParseMonitor(const std::string& s) {
  if (s == "every-step") return MonitorMode::kEveryStep;
  if (s == "certificate") return MonitorMode::kCertificate;
  throw ConfigError("unknown monitor mode '" + s + "' (valid options: every-step, certificate)");
}

// ---- run -------------------------------------------------------------------

struct RunArgs {
  std::string scenario = "reach-avoid";
  std::string filter = "gk";
  int trials = 1;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::string monitor = "every-step";
  int workers = 0;
  std::optional<double> duration;
};

int CmdRun(const RunArgs& a, Invocation inv) {
  ScenarioConfig config = LoadScenario(a.scenario);
  if (a.seed) config.seed = *a.seed;
  if (a.duration) config.duration = *a.duration;
  config.Validate();
  if (a.trials < 1) throw ConfigError("--trials must be at least 1");
  const FilterKind kind = ParseFilterKind(a.filter);
  const MonitorMode mode = ParseMonitor(a.monitor);
  const Scenario scenario = BuildScenario(config);
  inv.seed = config.seed;
  inv.workers = ResolveWorkers(a.workers);
  fs::create_directories(inv.out);

  auto pool = kind == FilterKind::kGkPar ? std::make_shared<ThreadPool>(inv.workers) : nullptr;
  std::unique_ptr<SafetyFilter> filter = MakeFilter(scenario, kind, mode, pool);

  json trials = json::array();
  bool diverged = false;
  double frac_sum = 0.0;
  double ts_sum = 0.0;
  int ts_count = 0;
  double ms_sum = 0.0;
  int goals = 0;
  int violations = 0;
  for (int trial = 0; trial < a.trials; ++trial) {
    const State x0 = SampleInitialState(config, trial);
    const EpisodeLog log = RunEpisode(scenario, *filter, x0);
    char dir[32];
    std::snprintf(dir, sizeof(dir), "trial_%02d", trial);
    fs::create_directories(inv.out / dir);
    std::ofstream csv(inv.out / dir / "trajectory.csv");
    WriteTrajectoryCsv(csv, log, config.world);

    json t = {{"trial", trial},
              {"initial_state", StateJson(x0)},
              {"status", StatusName(log.status)},
              {"trajectory", std::string(dir) + "/trajectory.csv"}};
    if (!log.message.empty()) t["message"] = log.message;
    if (log.status == EpisodeStatus::kDivergence) diverged = true;
    if (!log.steps.empty()) {
      const Metrics m = ComputeMetrics(log);
      t["metrics"] = MetricsJson(m);
      frac_sum += m.nominal_fraction;
      if (m.avg_switch_time) {
        ts_sum += *m.avg_switch_time;
        ++ts_count;
      }
      ms_sum += m.avg_compute_ms;
      goals += m.reached_goal;
      violations += m.violation;
    }
    if (config.world == ScenarioConfig::World::kHighway) {
      const LaneUsage lanes = AnalyzeLanes(config.highway, log);
      t["lanes"] = {{"left_nominal_lane", lanes.left_nominal_lane},
                    {"entered_backup_lane", lanes.entered_backup_lane},
                    {"max_lateral_deviation", lanes.max_lateral_deviation}};
    }
    std::cout << "trial " << trial << ": " << StatusName(log.status);
    if (t.contains("metrics")) {
      std::cout << " nominal=" << t["metrics"]["nominal_fraction"].get<double>() << "%";
    }
    std::cout << "\n";
    trials.push_back(t);
  }
  const double n = a.trials;
  json aggregate = {{"trials", a.trials},
                    {"nominal_fraction", frac_sum / n},
                    {"avg_T_S_star", ts_count ? json(ts_sum / ts_count) : json(nullptr)},
                    {"reached_goal_count", goals},
                    {"avg_compute_ms", ms_sum / n},
                    {"violations", violations}};
  json metrics = {{"schema_version", kSchemaVersion},
                  {"scenario", config.name},
                  {"filter", FilterKindName(kind)},
                  {"monitor", a.monitor},
                  {"trials", trials},
                  {"aggregate", aggregate}};
  WriteFile(inv.out / "metrics.json", metrics.dump(2) + "\n");
  WriteFile(inv.out / "scenario.json", ScenarioToJson(config) + "\n");
  inv.WriteManifest({{"filter", FilterKindName(kind)}, {"monitor", a.monitor}});
  return diverged ? kExitDivergence : kExitOk;
}

// ---- sets / verify / sweep -------------------------------------------------

json SummaryJson(const SetSample& s) {
  const SetFractions f = Fractions(s);
  const SignReport sign = CheckSignConsistency(s);
  return {{"schema_version", kSchemaVersion},
          {"resolution", s.resolution},
          {"points", s.size()},
          {"window", {s.window.x_min, s.window.x_max, s.window.y_min, s.window.y_max}},
          {"fractions",
           {{"S", f.s}, {"S0", f.s0}, {"I_BCBF", f.bcbf}, {"I_MPS", f.mps}, {"I_GK", f.gk}}},
          {"sign_consistency",
           {{"disagreements", sign.disagreements}, {"max_abs_h_bcbf", sign.max_abs_h}}},
          {"certified_sets",
           "S for Backup CBF; the validity sets V(dt) for MPS and the union over the "
           "switching-time grid for gatekeeper"}};
}

json ReportJson(const TheoremReport& r, const SetSample& s) {
  auto point = [&](int k) {
    return json{{"index", k}, {"x", s.points[k][0]}, {"y", s.points[k][1]}};
  };
  json v = json::array();
  for (int k : r.violations) v.push_back(point(k));
  json j = {{"schema_version", kSchemaVersion},
            {"theorem", r.theorem},
            {"points_tested", r.points_tested},
            {"violation_count", r.violations.size()},
            {"violations", v},
            {"pass", r.pass}};
  if (r.theorem == 4) {
    j["epsilon"] = r.epsilon;
    j["boundary_violation_count"] = r.boundary_violations.size();
    j["interior_violation_count"] = r.violations.size() - r.boundary_violations.size();
    j["interior_proxy"] =
        "bcbf-inactive, h_bcbf >= epsilon, and every 4-neighbor inside S bcbf-inactive";
  }
  return j;
}

struct GridArgs {
  std::string scenario = "di-slice";
  int grid = 0;
  std::string out = "out";
  int workers = 0;
  int theorem = 3;
  double epsilon = 0.05;
  std::vector<double> horizons;
  std::vector<int> grids;
};

SetSample Sample(const GridArgs& a, Invocation& inv, ScenarioConfig& config) {
  config = LoadScenario(a.scenario);
  const Scenario scenario = BuildScenario(config);
  const int res = a.grid > 0 ? a.grid : config.di_slice.grid_resolution;
  inv.workers = ResolveWorkers(a.workers);
  ThreadPool pool(inv.workers);
  fs::create_directories(inv.out);
  return SampleSets(scenario, res, &pool);
}

int CmdSets(const GridArgs& a, Invocation inv) {
  ScenarioConfig config;
  const SetSample s = Sample(a, inv, config);
  std::ofstream csv(inv.out / "sets.csv");
  WriteSetsCsv(csv, s);
  WriteFile(inv.out / "summary.json", SummaryJson(s).dump(2) + "\n");
  inv.WriteManifest({{"grid", s.resolution}});
  const SetFractions f = Fractions(s);
  std::cout << "points=" << s.size() << " S=" << f.s << " I_BCBF=" << f.bcbf
            << " I_MPS=" << f.mps << " I_GK=" << f.gk << "\n";
  return kExitOk;
}

int CmdVerify(const GridArgs& a, Invocation inv) {
  if (a.theorem != 3 && a.theorem != 4) throw ConfigError("--theorem must be 3 or 4");
  ScenarioConfig config;
  const SetSample s = Sample(a, inv, config);
  const TheoremReport r = a.theorem == 3 ? VerifyTheorem3(s) : VerifyTheorem4(s, a.epsilon);
  const std::string name = "theorem" + std::to_string(a.theorem) + ".json";
  WriteFile(inv.out / name, ReportJson(r, s).dump(2) + "\n");
  inv.WriteManifest({{"grid", s.resolution}, {"theorem", a.theorem}});
  std::cout << "theorem " << a.theorem << ": tested=" << r.points_tested
            << " violations=" << r.violations.size() << (r.pass ? " PASS" : " FAIL") << "\n";
  return r.pass ? kExitOk : kExitViolation;
}

int CmdSweep(const GridArgs& a, Invocation inv) {
  const ScenarioConfig config = LoadScenario(a.scenario);
  const Scenario scenario = BuildScenario(config);
  std::vector<double> horizons = a.horizons;
  if (horizons.empty()) {
    const double dt = config.monitor_dt;
    horizons = {dt, 2 * dt, 5 * dt, config.search_horizon};
  }
  std::vector<int> grids = a.grids;
  if (grids.empty()) grids = {21, 41};
  inv.workers = ResolveWorkers(a.workers);
  ThreadPool pool(inv.workers);
  fs::create_directories(inv.out);
  const auto rows = SweepHorizon(scenario, horizons, grids, &pool);
  std::ofstream csv(inv.out / "sweep.csv");
  WriteSweepCsv(csv, rows);
  inv.WriteManifest();
  for (const auto& r : rows) {
    std::cout << "T_H=" << r.search_horizon << " grid=" << r.resolution
              << " I_GK=" << r.gk_fraction << " I_MPS=" << r.mps_fraction
              << " search_ms=" << r.mean_search_ms << "\n";
  }
  return kExitOk;
}

// ---- bench -----------------------------------------------------------------

struct BenchArgs {
  std::string scenario = "reach-avoid";
  std::vector<int> workers;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
};

struct LatencyStats {
  double mean = 0.0;
  double median = 0.0;
  int samples = 0;
};

LatencyStats Stats(const EpisodeLog& log) {
  std::vector<double> ms;
  for (const auto& r : log.steps) ms.push_back(r.compute_ms);
  LatencyStats s;
  s.samples = static_cast<int>(ms.size());
  if (ms.empty()) return s;
  s.mean = std::accumulate(ms.begin(), ms.end(), 0.0) / ms.size();
  std::sort(ms.begin(), ms.end());
  const size_t mid = ms.size() / 2;
  s.median = ms.size() % 2 ? ms[mid] : 0.5 * (ms[mid - 1] + ms[mid]);
  return s;
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

int CmdBench(const BenchArgs& a, Invocation inv) {
  ScenarioConfig config = LoadScenario(a.scenario);
  if (a.seed) config.seed = *a.seed;
  if (a.duration) config.duration = *a.duration;
  config.Validate();
  const Scenario scenario = BuildScenario(config);
  std::vector<int> workers = a.workers;
  if (workers.empty()) workers = {1, 4, 8};
  for (int w : workers) {
    if (w < 1) throw ConfigError("--workers entries must be >= 1");
  }
  inv.seed = config.seed;
  inv.workers = *std::max_element(workers.begin(), workers.end());
  fs::create_directories(inv.out);
  const State x0 = SampleInitialState(config, 0);

  json rows = json::array();
  std::ofstream csv(inv.out / "bench.csv");
  csv << "filter,workers,mean_ms,median_ms,steps,identical_to_gk\n";
  auto record = [&](const std::string& name, int w, const EpisodeLog& log,
                    std::optional<bool> identical) {
    const LatencyStats s = Stats(log);
    rows.push_back({{"filter", name},
                    {"workers", w},
                    {"mean_ms", s.mean},
                    {"median_ms", s.median},
                    {"steps", s.samples},
                    {"identical_to_gk", identical ? json(*identical) : json(nullptr)}});
    csv << name << ',' << w << ',' << FormatDouble(s.mean) << ',' << FormatDouble(s.median) << ','
        << s.samples << ',' << (identical ? (*identical ? "1" : "0") : "") << '\n';
    std::cout << name << " workers=" << w << " mean=" << s.mean << "ms median=" << s.median
              << "ms\n";
    return s;
  };

  EpisodeLog gk_log;
  LatencyStats gk_stats;
  for (FilterKind kind : {FilterKind::kBcbf, FilterKind::kMps, FilterKind::kGk}) {
    auto filter = MakeFilter(scenario, kind);
    EpisodeLog log = RunEpisode(scenario, *filter, x0);
    const LatencyStats s = record(std::string(FilterKindName(kind)), 1, log, std::nullopt);
    if (kind == FilterKind::kGk) {
      gk_log = std::move(log);
      gk_stats = s;
    }
  }
  json comparison = json::array();
  for (int w : workers) {
    auto pool = std::make_shared<ThreadPool>(w);
    auto filter = MakeFilter(scenario, FilterKind::kGkPar, MonitorMode::kEveryStep, pool);
    const EpisodeLog log = RunEpisode(scenario, *filter, x0);
    const bool same = SameDecisions(log, gk_log);
    const LatencyStats s = record("gk-par", w, log, same);
    comparison.push_back({{"workers", w},
                          {"gk_mean_ms", gk_stats.mean},
                          {"gk_par_mean_ms", s.mean},
                          {"speedup", s.mean > 0 ? gk_stats.mean / s.mean : 0.0},
                          {"identical", same}});
  }
  json bench = {{"schema_version", kSchemaVersion},
                {"scenario", config.name},
                {"hardware_concurrency", std::thread::hardware_concurrency()},
                {"filters", rows},
                {"gk_vs_gk_par", comparison}};
  WriteFile(inv.out / "bench.json", bench.dump(2) + "\n");
  inv.WriteManifest();
  return kExitOk;
}

int CmdConfig(const std::string& scenario) {
  std::cout << ScenarioToJson(LoadScenario(scenario)) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Backup-policy safety filters: Backup CBF, MPS and gatekeeper"};
  app.require_subcommand(1);

  Invocation inv;
  inv.argv.assign(argv, argv + argc);
  inv.started_at = UtcNow();
  inv.start = std::chrono::steady_clock::now();

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run closed-loop episodes");
  run_cmd->add_option("--scenario", run.scenario, "Built-in scenario name or JSON path");
  run_cmd->add_option("--filter", run.filter, "bcbf | mps | gk | gk-par");
  run_cmd->add_option("--trials", run.trials, "Number of seeded trials");
  run_cmd->add_option("--seed", run.seed, "Override the scenario seed");
  run_cmd->add_option("--out", run.out, "Output directory");
  run_cmd->add_option("--monitor", run.monitor, "every-step | certificate");
  run_cmd->add_option("--workers", run.workers, "Worker threads for gk-par (default: SHIELD_THREADS or cores)");
  run_cmd->add_option("--duration", run.duration, "Override the episode duration [s]");

  GridArgs sets;
  auto* sets_cmd = app.add_subcommand("sets", "Sample S, S0 and the inactive sets on the slice grid");
  sets_cmd->add_option("--scenario", sets.scenario, "Static slice scenario");
  sets_cmd->add_option("--grid", sets.grid, "Grid resolution per axis");
  sets_cmd->add_option("--out", sets.out, "Output directory");
  sets_cmd->add_option("--workers", sets.workers, "Worker threads");

  GridArgs verify;
  auto* verify_cmd = app.add_subcommand("verify", "Check the inactive-set inclusions on the slice grid");
  verify_cmd->add_option("--theorem", verify.theorem, "3 (I_MPS in I_GK) or 4 (interior of I_BCBF in I_GK)")
      ->required();
  verify_cmd->add_option("--epsilon", verify.epsilon, "Interior margin on h_bcbf (theorem 4)");
  verify_cmd->add_option("--scenario", verify.scenario, "Static slice scenario");
  verify_cmd->add_option("--grid", verify.grid, "Grid resolution per axis");
  verify_cmd->add_option("--out", verify.out, "Output directory");
  verify_cmd->add_option("--workers", verify.workers, "Worker threads");

  GridArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep the search horizon and grid resolution");
  sweep_cmd->add_option("--scenario", sweep.scenario, "Static slice scenario");
  sweep_cmd->add_option("--horizons", sweep.horizons, "Search horizons T_H [s]");
  sweep_cmd->add_option("--grids", sweep.grids, "Grid resolutions");
  sweep_cmd->add_option("--out", sweep.out, "Output directory");
  sweep_cmd->add_option("--workers", sweep.workers, "Worker threads");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Decision latency per filter");
  bench_cmd->add_option("--scenario", bench.scenario, "Built-in scenario name or JSON path");
  bench_cmd->add_option("--workers", bench.workers, "Worker counts for gk-par");
  bench_cmd->add_option("--out", bench.out, "Output directory");
  bench_cmd->add_option("--seed", bench.seed, "Override the scenario seed");
  bench_cmd->add_option("--duration", bench.duration, "Override the episode duration [s]");

  std::string config_name = "reach-avoid";
  auto* config_cmd = app.add_subcommand("config", "Print a scenario as JSON");
  config_cmd->add_option("scenario", config_name, "Built-in scenario name or JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run_cmd) {
      inv.command = "run";
      inv.scenario = run.scenario;
      inv.out = run.out;
      return CmdRun(run, inv);
    }
    if (*sets_cmd) {
      inv.command = "sets";
      inv.scenario = sets.scenario;
      inv.out = sets.out;
      return CmdSets(sets, inv);
    }
    if (*verify_cmd) {
      inv.command = "verify";
      inv.scenario = verify.scenario;
      inv.out = verify.out;
      return CmdVerify(verify, inv);
    }
    if (*sweep_cmd) {
      inv.command = "sweep";
      inv.scenario = sweep.scenario;
      inv.out = sweep.out;
      return CmdSweep(sweep, inv);
    }
    if (*bench_cmd) {
      inv.command = "bench";
      inv.scenario = bench.scenario;
      inv.out = bench.out;
      return CmdBench(bench, inv);
    }
    if (*config_cmd) return CmdConfig(config_name);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}
