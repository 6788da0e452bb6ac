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

#ifndef SHIELD_SCENARIOS_H_
#define SHIELD_SCENARIOS_H_

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "shield/backup_cbf.h"
#include "shield/bicycle.h"
#include "shield/policies.h"
#include "shield/shields.h"

namespace shield {

// Raised for malformed or inconsistent scenario configurations.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Scripted obstacle moving along +x. The position along the track is
// (offset + speed * t) mod (end_x - spawn_x), measured from spawn_x; an
// infinite end_x disables respawning.
struct ObstacleScript {
  enum class Kind { kCorridorRunner, kLaneRunner };
  Kind kind = Kind::kCorridorRunner;
  double speed = 0.0;   // m/s
  double extent = 1.0;  // length along x [m]
  double width = 0.0;   // lateral size [m]; corridor runners span the corridor
  double spawn_x = 0.0;
  double end_x = std::numeric_limits<double>::infinity();
  double offset = 0.0;  // track position at t = 0 [m]
  double lane_y = 0.0;  // lateral center of a lane runner [m]
};

struct ObstacleState {
  double x = 0.0;  // center
  double y = 0.0;
  double vx = 0.0;
};

ObstacleState ObstacleAt(const ObstacleScript& script, double t);

// Static disk obstacle with a recovery strip below it.
struct DiSliceWorld {
  double obstacle_radius = 1.0;
  double a_max = 0.5;
  // S0: sqrt(e^2 + strip_cross e vy + strip_velocity_weight vy^2) <=
  // strip_half_width with e = y - recovery_y, and speed <= strip_speed. The
  // quadratic form is a Lyapunov function of the line-tracking backup, so S0 is
  // forward invariant under it. At vy = 0 it reduces to the strip |e| <= hw.
  double recovery_y = -2.0;
  double strip_half_width = 0.2;
  double strip_speed = 0.2;
  double strip_cross = 1.0;
  double strip_velocity_weight = 0.5;
  // Velocity slice and (x, y) window of the set grid.
  double slice_vx = 2.0;
  double slice_vy = 0.0;
  Box2 window{-6.0, 4.0, -3.0, 3.0};
  int grid_resolution = 101;
};

// Straight hallway along x with one side pocket above the corridor and a goal
// region past the end of the obstacle track.
struct HallwayWorld {
  double x_min = -2.0;
  double x_max = 31.0;
  double half_width = 1.5;
  double pocket_center_x = 5.0;
  double pocket_width = 3.0;
  double pocket_depth = 2.0;
  double robot_radius = 0.5;
  double max_speed = 1.5;
  double max_accel = 2.0;
  Box2 goal_region{26.5, 30.0, -0.8, 0.8};
  // S0 is the union of two ellipsoids in (position, velocity), one around the
  // pocket center and one around the goal center. Per axis i with offset e_i
  // and velocity v_i, q = sum_i (e_i^2 + terminal_cross e_i v_i +
  // terminal_velocity_weight v_i^2) / hold_i^2 and S0 is q <= 1.
  double pocket_hold_x = 0.5;
  double pocket_hold_y = 0.35;
  double goal_hold_x = 0.5;
  double goal_hold_y = 0.35;
  double terminal_cross = 0.5;
  double terminal_velocity_weight = 0.375;

  double pocket_center_y() const { return half_width + 0.5 * pocket_depth; }
};

// Straight multi-lane road; lane i has centerline (i + 0.5) * lane_width.
struct HighwayWorld {
  double road_length = 300.0;
  int lanes = 5;
  double lane_width = 4.0;
  int nominal_lane = 1;
  int backup_lane = 3;
  double vehicle_length = 4.5;
  double vehicle_width = 1.8;
  // S0 is a sublevel set of a quadratic Lyapunov function of the backup
  // closed loop, linearized about steady driving on the backup centerline. The
  // coordinates (y - y_b, yaw, yaw rate, sideslip, V - v_ref, steer, torque)
  // are divided by s0_scales before the Lyapunov equation is solved with an
  // identity right-hand side. The level is chosen so the widest lateral offset
  // in S0 equals s0_lateral.
  double s0_lateral = 1.5;
  std::array<double, 7> s0_scales{1.5, 0.15, 0.1, 0.02, 1.0, 0.05, 500.0};
  double goal_x = 250.0;
  BicycleParams vehicle;

  double LaneCenter(int lane) const { return (lane + 0.5) * lane_width; }
  double road_width() const { return lanes * lane_width; }
};

struct ScenarioConfig {
  std::string name;
  enum class World { kDiSlice, kHallway, kHighway };
  World world = World::kDiSlice;
  DiSliceWorld di_slice;
  HallwayWorld hallway;
  HighwayWorld highway;

  PolicySpec nominal;
  PolicySpec backup;
  double class_k_gain = 1.0;
  double validity_margin = 0.0;
  double monitor_dt = 0.05;
  double backup_horizon = 12.0;
  double search_horizon = 10.0;
  double dt = 0.01;
  double duration = 60.0;
  int n_collocation = 25;
  // Initial states are drawn uniformly from [initial_lower, initial_upper].
  State initial_lower;
  State initial_upper;
  std::vector<ObstacleScript> obstacles;
  std::uint64_t seed = 1;

  // Throws ConfigError when parameters are inconsistent.
  void Validate() const;
};

std::vector<std::string> BuiltinScenarioNames();
// Throws ConfigError for an unknown name.
ScenarioConfig BuiltinScenario(const std::string& name);

// Strict JSON form; unknown keys are rejected. Missing keys keep the values of
// the built-in scenario named by "base", or the struct defaults without one.
ScenarioConfig ParseScenarioJson(const std::string& text);
std::string ScenarioToJson(const ScenarioConfig& config);
// A built-in name or a path to a JSON file.
ScenarioConfig LoadScenario(const std::string& name_or_path);

// Everything a filter needs, assembled from a config.
struct Scenario {
  ScenarioConfig config;
  BackupSystem sys;
  // Null when the scenario has no goal.
  std::function<bool(double, const State&)> goal;

  ShieldContext Shield() const;
  BackupCbfContext Bcbf() const;
  InactiveContexts Inactive() const;
};

Scenario BuildScenario(const ScenarioConfig& config);

// Margin builders, exposed for tests.
MarginFn DiskMargin(double radius);
MarginFn StripMargin(double y_ref, double half_width, double max_speed, double cross = 0.0,
                     double velocity_weight = 0.0);
MarginFn HallwayMarginC(const HallwayWorld& world, const std::vector<ObstacleScript>& obstacles);
MarginFn HallwayMarginS0(const HallwayWorld& world);
MarginFn HighwayMarginC(const HighwayWorld& world, const std::vector<ObstacleScript>& obstacles);
// Solves the Lyapunov equation for `backup` on `model` at build time.
MarginFn HighwayMarginS0(const HighwayWorld& world, const ControlAffineModel& model,
                         const Policy& backup, double v_ref);

enum class FilterKind { kBcbf, kMps, kGk, kGkPar };
std::string_view FilterKindName(FilterKind kind);
// Throws ConfigError listing the valid names.
FilterKind ParseFilterKind(std::string_view name);

// `pool` is used by kGkPar only and created with DefaultWorkerCount() workers
// when null.
std::unique_ptr<SafetyFilter> MakeFilter(const Scenario& scenario, FilterKind kind,
                                         MonitorMode mode = MonitorMode::kEveryStep,
                                         std::shared_ptr<ThreadPool> pool = nullptr);

State SampleInitialState(const ScenarioConfig& config, int trial);

struct StepRecord {
  double t = 0.0;
  State x;
  Input u;
  DecisionSource source = DecisionSource::kNominal;
  std::optional<double> switch_time;
  std::optional<double> h_bcbf;
  // margin_C at x, and its minimum over the integration samples of the step.
  double margin_c = 0.0;
  double min_margin_c = 0.0;
  double compute_ms = 0.0;
};

enum class EpisodeStatus { kGoalReached, kTimeout, kViolation, kDivergence };
std::string_view StatusName(EpisodeStatus status);

struct EpisodeLog {
  std::string scenario;
  std::string filter;
  std::vector<StepRecord> steps;
  EpisodeStatus status = EpisodeStatus::kTimeout;
  bool violation = false;
  std::string message;
};

// Closed loop at the monitor rate, integrated with step dt. Over each monitor
// interval MPS and gatekeeper run the feedback law they selected; Backup CBF
// holds its QP input. The episode ends at the goal,
// on a violation (margin_C < -validity_margin at any integration sample), on
// divergence, or at the configured duration.
EpisodeLog RunEpisode(const Scenario& scenario, SafetyFilter& filter, const State& x0);

struct Metrics {
  double nominal_fraction = 0.0;  // percent of steps with source nominal
  std::optional<double> avg_switch_time;
  bool reached_goal = false;
  double avg_compute_ms = 0.0;
  int steps = 0;
  bool violation = false;
  double min_margin_c = 0.0;
};

// Throws std::invalid_argument for an empty log.
Metrics ComputeMetrics(const EpisodeLog& log);

// Lane usage of a highway episode.
struct LaneUsage {
  bool left_nominal_lane = false;
  bool entered_backup_lane = false;
  double max_lateral_deviation = 0.0;  // from the nominal centerline [m]
};

LaneUsage AnalyzeLanes(const HighwayWorld& world, const EpisodeLog& log);

// Uniform (x, y) grid over `window` at fixed velocity; x varies fastest.
std::vector<State> SliceGrid(const Box2& window, double vx, double vy, int resolution);
std::vector<State> SliceGrid(const ScenarioConfig& config, int resolution);

}  // namespace shield

#endif  // SHIELD_SCENARIOS_H_
