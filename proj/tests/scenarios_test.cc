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

#include "shield/scenarios.h"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "shield/bicycle.h"
#include "test_util.h"

namespace shield {
namespace {

using testing::Vec4;

TEST(ObstacleTest, Kinematics) {
  ObstacleScript o;
  o.speed = 3.0;
  o.spawn_x = -15.0;
  o.end_x = 15.0;
  EXPECT_EQ(ObstacleAt(o, 0.0).x, -15.0);
  EXPECT_DOUBLE_EQ(ObstacleAt(o, 5.0).x, 0.0);
  EXPECT_EQ(ObstacleAt(o, 5.0).vx, 3.0);
  // One traversal takes 10 s; just past it the obstacle is back at the spawn.
  EXPECT_NEAR(ObstacleAt(o, 10.01).x, -15.0 + 0.03, 1e-9);
  EXPECT_NEAR(ObstacleAt(o, 25.0).x, 0.0, 1e-9);
}

TEST(ObstacleTest, OffsetAndNoRespawn) {
  ObstacleScript o;
  o.kind = ObstacleScript::Kind::kLaneRunner;
  o.speed = 4.0;
  o.spawn_x = 40.0;
  o.lane_y = 10.0;
  o.offset = 2.0;
  const ObstacleState s = ObstacleAt(o, 100.0);
  EXPECT_EQ(s.x, 442.0);
  EXPECT_EQ(s.y, 10.0);
}

TEST(ScenarioConfigTest, Snapshot) {
  const ScenarioConfig di = BuiltinScenario("di-slice");
  EXPECT_EQ(di.di_slice.a_max, 0.5);
  EXPECT_EQ(di.nominal.y_ref, 2.0);
  EXPECT_EQ(di.backup.y_ref, -2.0);
  EXPECT_EQ(di.di_slice.slice_vx, 2.0);
  EXPECT_EQ(di.di_slice.slice_vy, 0.0);
  EXPECT_EQ(di.di_slice.grid_resolution, 101);

  const ScenarioConfig ra = BuiltinScenario("reach-avoid");
  EXPECT_EQ(ra.hallway.robot_radius, 0.5);
  EXPECT_EQ(ra.hallway.max_speed, 1.5);
  EXPECT_EQ(ra.hallway.max_accel, 2.0);
  ASSERT_EQ(ra.obstacles.size(), 1u);
  EXPECT_EQ(ra.obstacles[0].speed, 3.0);
  EXPECT_EQ(ra.search_horizon, 10.0);
  EXPECT_EQ(ra.backup_horizon, 12.0);
  EXPECT_EQ(ra.monitor_dt, 0.05);
  EXPECT_EQ(ra.duration, 60.0);

  const ScenarioConfig hw = BuiltinScenario("highway");
  EXPECT_EQ(hw.highway.road_length, 300.0);
  EXPECT_EQ(hw.highway.lanes, 5);
  EXPECT_EQ(hw.highway.lane_width, 4.0);
  EXPECT_EQ(hw.nominal.v_ref, 10.0);
  EXPECT_EQ(hw.search_horizon, 6.0);
  EXPECT_EQ(hw.backup_horizon, 3.0);
  EXPECT_EQ(hw.duration, 40.0);
  EXPECT_NEAR(hw.highway.vehicle.max_steer, 20.0 * kDegToRad, 1e-15);
  EXPECT_NEAR(hw.highway.vehicle.max_steer_rate, 25.0 * kDegToRad, 1e-15);
  EXPECT_EQ(hw.highway.vehicle.max_speed, 20.0);
  EXPECT_EQ(hw.highway.vehicle.max_torque, 4000.0);
  EXPECT_EQ(hw.highway.vehicle.max_torque_rate, 8000.0);
  // The obstacle runs in the lane next to the nominal one; the backup lane is
  // farther out.
  ASSERT_EQ(hw.obstacles.size(), 1u);
  EXPECT_EQ(hw.obstacles[0].lane_y, hw.highway.LaneCenter(hw.highway.nominal_lane + 1));
  EXPECT_EQ(hw.highway.backup_lane, hw.highway.nominal_lane + 2);
}

TEST(ScenarioConfigTest, BuiltinsValidate) {
  for (const std::string& name : BuiltinScenarioNames()) {
    EXPECT_NO_THROW(BuiltinScenario(name).Validate()) << name;
    EXPECT_NO_THROW(BuildScenario(BuiltinScenario(name))) << name;
  }
  EXPECT_THROW(BuiltinScenario("nope"), ConfigError);
}

TEST(ScenarioConfigTest, RejectsInconsistentParameters) {
  ScenarioConfig c = BuiltinScenario("reach-avoid");
  c.search_horizon = 0.01;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = BuiltinScenario("reach-avoid");
  c.search_horizon = 1.02;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = BuiltinScenario("highway");
  c.highway.lanes = 0;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = BuiltinScenario("highway");
  c.backup_horizon = -1.0;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = BuiltinScenario("di-slice");
  c.di_slice.strip_cross = 3.0;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = BuiltinScenario("reach-avoid");
  c.hallway.pocket_hold_x = 0.0;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = BuiltinScenario("highway");
  c.highway.s0_scales[3] = 0.0;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = BuiltinScenario("di-slice");
  c.backup.kind = PolicySpec::Kind::kLaneChangeBackup;
  EXPECT_THROW(c.Validate(), ConfigError);
}

TEST(ScenarioJsonTest, RoundTrip) {
  for (const std::string& name : BuiltinScenarioNames()) {
    const std::string text = ScenarioToJson(BuiltinScenario(name));
    EXPECT_EQ(ScenarioToJson(ParseScenarioJson(text)), text) << name;
  }
}

TEST(ScenarioJsonTest, BaseAndOverrides) {
  const ScenarioConfig c = ParseScenarioJson(
      R"({"base": "reach-avoid", "seed": 7, "hallway": {"max_speed": 1.2},
          "initial_state": {"lower": [0, 0, 0, 0], "upper": [0.5, 0, 0, 0]}})");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.hallway.max_speed, 1.2);
  EXPECT_EQ(c.hallway.max_accel, 2.0);
  EXPECT_EQ(c.initial_upper[0], 0.5);
}

TEST(ScenarioJsonTest, Strictness) {
  EXPECT_THROW(ParseScenarioJson(R"({"base": "di-slice", "colour": 1})"), ConfigError);
  EXPECT_THROW(ParseScenarioJson(R"({"base": "reach-avoid", "hallway": {"hold": 1}})"),
               ConfigError);
  EXPECT_THROW(ParseScenarioJson(R"({"base": "di-slice", "dt": "fast"})"), ConfigError);
  EXPECT_THROW(ParseScenarioJson(R"({"base": "di-slice", "n_collocation": 2.5})"), ConfigError);
  EXPECT_THROW(ParseScenarioJson(R"({"base": "highway", "highway": {"s0_scales": [1, 2]}})"),
               ConfigError);
  EXPECT_THROW(ParseScenarioJson("{not json"), ConfigError);
  EXPECT_THROW(ParseScenarioJson(R"({"base": "di-slice", "obstacles": [{"kind": "ufo"}]})"),
               ConfigError);
  EXPECT_THROW(ParseScenarioJson(R"({"base": "di-slice", "monitor_dt": 0.3})"), ConfigError);
  try {
    ParseScenarioJson(R"({"base": "reach-avoid", "hallway": {"hold": 1}})");
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("hold"), std::string::npos);
  }
}

TEST(ScenarioJsonTest, InfiniteEndIsNull) {
  const std::string text = ScenarioToJson(BuiltinScenario("highway"));
  EXPECT_NE(text.find("\"end_x\": null"), std::string::npos);
  EXPECT_TRUE(std::isinf(ParseScenarioJson(text).obstacles[0].end_x));
}

TEST(LoadScenarioTest, UnknownPath) {
  EXPECT_THROW(LoadScenario("/nonexistent/scenario.json"), ConfigError);
  EXPECT_EQ(LoadScenario("highway").name, "highway");
}

TEST(FilterKindTest, Names) {
  for (FilterKind k : {FilterKind::kBcbf, FilterKind::kMps, FilterKind::kGk, FilterKind::kGkPar}) {
    EXPECT_EQ(ParseFilterKind(FilterKindName(k)), k);
  }
  try {
    ParseFilterKind("qp");
    ADD_FAILURE();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("gk-par"), std::string::npos);
  }
}

TEST(SliceGridTest, Examples) {
  const std::vector<State> g = SliceGrid(Box2{-1, 1, -1, 1}, 2.0, 0.0, 3);
  ASSERT_EQ(g.size(), 9u);
  for (const State& x : g) {
    EXPECT_EQ(x[2], 2.0);
    EXPECT_EQ(x[3], 0.0);
  }
  EXPECT_EQ(g[0], Vec4(-1, -1, 2, 0));
  EXPECT_EQ(g[1], Vec4(0, -1, 2, 0));
  EXPECT_EQ(g[8], Vec4(1, 1, 2, 0));
  EXPECT_EQ(SliceGrid(BuiltinScenario("di-slice"), 101).size(), 10201u);
  EXPECT_THROW(SliceGrid(Box2{-1, 1, -1, 1}, 2.0, 0.0, 1), std::invalid_argument);
}

TEST(SampleInitialStateTest, SeededAndInBox) {
  const ScenarioConfig c = BuiltinScenario("highway");
  for (int trial = 0; trial < 20; ++trial) {
    const State x = SampleInitialState(c, trial);
    EXPECT_EQ(x, SampleInitialState(c, trial));
    EXPECT_TRUE((x.array() >= c.initial_lower.array()).all());
    EXPECT_TRUE((x.array() <= c.initial_upper.array()).all());
  }
  EXPECT_NE(SampleInitialState(c, 0), SampleInitialState(c, 1));
  ScenarioConfig other = c;
  other.seed = 99;
  EXPECT_NE(SampleInitialState(c, 0), SampleInitialState(other, 0));
}

EpisodeLog LogWithSources(const std::vector<DecisionSource>& sources) {
  EpisodeLog log;
  for (DecisionSource s : sources) {
    StepRecord r;
    r.source = s;
    r.switch_time = s == DecisionSource::kNominal ? 1.0 : 0.0;
    r.compute_ms = 2.0;
    log.steps.push_back(r);
  }
  return log;
}

TEST(ComputeMetricsTest, Examples) {
  const Metrics m = ComputeMetrics(
      LogWithSources({DecisionSource::kNominal, DecisionSource::kNominal, DecisionSource::kBackup}));
  EXPECT_NEAR(m.nominal_fraction, 66.67, 0.005);
  EXPECT_EQ(m.steps, 3);
  EXPECT_EQ(m.avg_compute_ms, 2.0);
  const Metrics b = ComputeMetrics(LogWithSources({DecisionSource::kBackup, DecisionSource::kBackup}));
  EXPECT_EQ(b.nominal_fraction, 0.0);
  ASSERT_TRUE(b.avg_switch_time.has_value());
  EXPECT_EQ(*b.avg_switch_time, 0.0);
  EXPECT_THROW(ComputeMetrics(EpisodeLog{}), std::invalid_argument);
}

TEST(ComputeMetricsTest, BcbfHasNoSwitchTime) {
  EpisodeLog log;
  StepRecord r;
  r.source = DecisionSource::kQp;
  log.steps = {r, r};
  EXPECT_FALSE(ComputeMetrics(log).avg_switch_time.has_value());
}

TEST(RunEpisodeTest, ObstacleFreeHallway) {
  ScenarioConfig c = BuiltinScenario("reach-avoid");
  c.obstacles.clear();
  const Scenario s = BuildScenario(c);
  auto filter = MakeFilter(s, FilterKind::kGk);
  const EpisodeLog log = RunEpisode(s, *filter, SampleInitialState(c, 0));
  EXPECT_EQ(log.status, EpisodeStatus::kGoalReached);
  EXPECT_EQ(ComputeMetrics(log).nominal_fraction, 100.0);
  EXPECT_FALSE(log.violation);
}

TEST(RunEpisodeTest, StartInGoal) {
  const Scenario s = BuildScenario(BuiltinScenario("reach-avoid"));
  auto filter = MakeFilter(s, FilterKind::kMps);
  const EpisodeLog log = RunEpisode(s, *filter, Vec4(28, 0, 0, 0));
  EXPECT_EQ(log.status, EpisodeStatus::kGoalReached);
  EXPECT_LE(log.steps.size(), 1u);
}

TEST(RunEpisodeTest, UniformSpacingAndDeterminism) {
  ScenarioConfig c = BuiltinScenario("highway");
  c.duration = 4.0;
  const Scenario s = BuildScenario(c);
  for (FilterKind kind : {FilterKind::kMps, FilterKind::kGk, FilterKind::kBcbf}) {
    auto f1 = MakeFilter(s, kind);
    auto f2 = MakeFilter(s, kind);
    const State x0 = SampleInitialState(c, 0);
    const EpisodeLog a = RunEpisode(s, *f1, x0);
    const EpisodeLog b = RunEpisode(s, *f2, x0);
    ASSERT_EQ(a.steps.size(), b.steps.size());
    ASSERT_EQ(a.steps.size(), 80u);
    for (size_t k = 0; k < a.steps.size(); ++k) {
      EXPECT_NEAR(a.steps[k].t, 0.05 * k, 1e-9);
      EXPECT_EQ(a.steps[k].x, b.steps[k].x);
      EXPECT_EQ(a.steps[k].u, b.steps[k].u);
      EXPECT_EQ(a.steps[k].source, b.steps[k].source);
      EXPECT_EQ(a.steps[k].switch_time, b.steps[k].switch_time);
      EXPECT_EQ(a.steps[k].h_bcbf, b.steps[k].h_bcbf);
      EXPECT_EQ(a.steps[k].min_margin_c, b.steps[k].min_margin_c);
    }
  }
}

TEST(RunEpisodeTest, ViolationIsRecorded) {
  // An unfiltered line tracker at y = 0 drives through the disk.
  ScenarioConfig c = BuiltinScenario("di-slice");
  c.nominal.y_ref = 0.0;
  const Scenario s = BuildScenario(c);
  struct Passthrough : SafetyFilter {
    explicit Passthrough(Policy p) : policy(std::move(p)) {}
    FilterDecision Decide(double t, const State& x) override {
      FilterDecision d;
      d.input = policy(t, x);
      return d;
    }
    std::string_view name() const override { return "none"; }
    Policy policy;
  } filter(s.sys.nominal);
  const EpisodeLog log = RunEpisode(s, filter, Vec4(-4, 0, 2, 0));
  EXPECT_TRUE(log.violation);
  EXPECT_EQ(log.status, EpisodeStatus::kViolation);
  EXPECT_LT(ComputeMetrics(log).min_margin_c, 0.0);
}

TEST(RunEpisodeTest, MonitorFiltersRunSelectedFeedbackLaw) {
  // Backup CBF holds its input; MPS and gatekeeper run their policy. With a
  // nominal policy that depends on the state the two differ within a step.
  ScenarioConfig c = BuiltinScenario("di-slice");
  c.duration = 0.2;
  const Scenario s = BuildScenario(c);
  const State x0 = Vec4(-5.5, 1.0, 2.0, 0.0);
  auto mps = MakeFilter(s, FilterKind::kMps);
  const EpisodeLog log = RunEpisode(s, *mps, x0);
  ASSERT_EQ(log.steps.size(), 2u);
  ASSERT_EQ(log.steps[0].source, DecisionSource::kNominal);
  const Trajectory feedback = IntegrateFlow(s.sys.model, s.sys.nominal, x0, 0.0, 0.1, s.sys.dt);
  EXPECT_EQ(log.steps[1].x, feedback.back());
}

TEST(AnalyzeLanesTest, Classification) {
  const HighwayWorld w = BuiltinScenario("highway").highway;
  EpisodeLog log;
  StepRecord r;
  r.x = State::Zero(8);
  r.x[kPy] = w.LaneCenter(w.nominal_lane) + 0.5;
  log.steps.push_back(r);
  LaneUsage u = AnalyzeLanes(w, log);
  EXPECT_FALSE(u.left_nominal_lane);
  EXPECT_FALSE(u.entered_backup_lane);
  EXPECT_NEAR(u.max_lateral_deviation, 0.5, 1e-12);
  r.x[kPy] = w.LaneCenter(w.backup_lane);
  log.steps.push_back(r);
  u = AnalyzeLanes(w, log);
  EXPECT_TRUE(u.left_nominal_lane);
  EXPECT_TRUE(u.entered_backup_lane);
}

TEST(HighwayMarginTest, ObstacleAndRoadEdges) {
  const ScenarioConfig c = BuiltinScenario("highway");
  const Scenario s = BuildScenario(c);
  State x = State::Zero(8);
  x[kPx] = 40.0;
  x[kPy] = c.highway.LaneCenter(c.highway.nominal_lane + 1);
  x[kSpeed] = 10.0;
  // On top of the obstacle at t = 0.
  EXPECT_LT(s.sys.spec.MarginC(0.0, x), 0.0);
  x[kPy] = c.highway.LaneCenter(0);
  // Lane 0 center: 2 m from the road edge minus half the width.
  EXPECT_NEAR(s.sys.spec.MarginC(0.0, x), 2.0 - 0.9, 1e-12);
}

TEST(HighwayMarginTest, TerminalSetShape) {
  const ScenarioConfig c = BuiltinScenario("highway");
  const Scenario s = BuildScenario(c);
  State x = State::Zero(8);
  x[kPy] = c.highway.LaneCenter(c.highway.backup_lane);
  x[kSpeed] = c.backup.v_ref;
  EXPECT_NEAR(s.sys.spec.MarginS0(0.0, x), c.highway.s0_lateral, 1e-12);
  // The widest lateral offset inside S0 is s0_lateral.
  x[kPy] += c.highway.s0_lateral + 1e-6;
  EXPECT_LT(s.sys.spec.MarginS0(0.0, x), 0.0);
  x[kPy] = c.highway.LaneCenter(c.highway.nominal_lane);
  EXPECT_LT(s.sys.spec.MarginS0(0.0, x), 0.0);
}

TEST(HallwayMarginTest, WallsAndTerminalSets) {
  const ScenarioConfig c = BuiltinScenario("reach-avoid");
  const Scenario s = BuildScenario(c);
  const HallwayWorld& w = c.hallway;
  // Corridor centerline far from the obstacle: 1.5 m to each wall minus radius.
  EXPECT_NEAR(s.sys.spec.MarginC(0.0, Vec4(15, 0, 0, 0)), 1.0, 1e-12);
  EXPECT_LT(s.sys.spec.MarginC(0.0, Vec4(15, 1.2, 0, 0)), 0.0);
  // The pocket opens the corridor above its mouth.
  EXPECT_GT(s.sys.spec.MarginC(0.0, Vec4(w.pocket_center_x, 1.4, 0, 0)), 0.0);
  EXPECT_NEAR(s.sys.spec.MarginS0(0.0, Vec4(w.pocket_center_x, w.pocket_center_y(), 0, 0)),
              std::min(w.pocket_hold_x, w.pocket_hold_y), 1e-12);
  EXPECT_GT(s.sys.spec.MarginS0(0.0, Vec4(w.goal_region.cx(), w.goal_region.cy(), 0, 0)), 0.0);
  EXPECT_LT(s.sys.spec.MarginS0(0.0, Vec4(15, 0, 0, 0)), 0.0);
}

}  // namespace
}  // namespace shield
