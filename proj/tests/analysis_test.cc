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

#include "shield/analysis.h"

#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "shield/scenarios.h"
#include "shield/thread_pool.h"
#include "test_util.h"

namespace shield {
namespace {

using testing::Vec4;

constexpr int kRes = 21;

class SliceSetsTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    scenario_ = new Scenario(BuildScenario(BuiltinScenario("di-slice")));
    sample_ = new SetSample(SampleSets(*scenario_, kRes));
  }
  static void TearDownTestSuite() {
    delete sample_;
    delete scenario_;
  }
  static int Index(double x, double y) {
    const Box2& w = scenario_->config.di_slice.window;
    const int i = static_cast<int>(std::lround((x - w.x_min) / (w.x_max - w.x_min) * (kRes - 1)));
    const int j = static_cast<int>(std::lround((y - w.y_min) / (w.y_max - w.y_min) * (kRes - 1)));
    return j * kRes + i;
  }
  static Scenario* scenario_;
  static SetSample* sample_;
};

Scenario* SliceSetsTest::scenario_ = nullptr;
SetSample* SliceSetsTest::sample_ = nullptr;

TEST_F(SliceSetsTest, Shape) {
  EXPECT_EQ(sample_->size(), static_cast<size_t>(kRes * kRes));
  EXPECT_EQ(sample_->in_s.size(), sample_->size());
  EXPECT_EQ(sample_->h_bcbf.size(), sample_->size());
  EXPECT_EQ(sample_->resolution, kRes);
}

TEST_F(SliceSetsTest, ObstacleInteriorAllFalse) {
  const int k = Index(0.0, 0.0);
  ASSERT_EQ(sample_->points[k][0], 0.0);
  ASSERT_EQ(sample_->points[k][1], 0.0);
  EXPECT_FALSE(sample_->in_s[k]);
  EXPECT_FALSE(sample_->in_s0[k]);
  EXPECT_FALSE(sample_->inactive_bcbf[k]);
  EXPECT_FALSE(sample_->inactive_mps[k]);
  EXPECT_FALSE(sample_->inactive_gk[k]);
}

TEST_F(SliceSetsTest, FarRegionAllTrue) {
  // Below the obstacle, on the way down to the recovery line.
  const int k = Index(-6.0, -1.5);
  EXPECT_TRUE(sample_->in_s[k]);
  EXPECT_TRUE(sample_->inactive_bcbf[k]);
  EXPECT_TRUE(sample_->inactive_mps[k]);
  EXPECT_TRUE(sample_->inactive_gk[k]);
}

TEST_F(SliceSetsTest, MembershipMatchesDefiningOperations) {
  const InactiveContexts ctx = scenario_->Inactive();
  for (size_t k = 0; k < sample_->size(); k += 7) {
    const State& x = sample_->points[k];
    EXPECT_EQ(sample_->in_s[k], InRecoverableSet(scenario_->sys, x, 0.0));
    EXPECT_EQ(sample_->in_s0[k], scenario_->sys.spec.MarginS0(0.0, x) >= 0.0);
    EXPECT_EQ(sample_->inactive_mps[k],
              EvaluateCandidate(scenario_->sys, x, 0.0, scenario_->config.monitor_dt).valid);
    EXPECT_EQ(sample_->inactive_gk[k], InactiveMembership(FilterMethod::kGk, ctx, 0.0, x));
    EXPECT_EQ(sample_->inactive_bcbf[k], InactiveMembership(FilterMethod::kBcbf, ctx, 0.0, x));
    EXPECT_EQ(sample_->h_bcbf[k], EvalHBcbf(scenario_->Bcbf(), 0.0, x));
  }
}

TEST_F(SliceSetsTest, Theorem3) {
  const TheoremReport r = VerifyTheorem3(*sample_);
  EXPECT_TRUE(r.pass);
  EXPECT_TRUE(r.violations.empty());
  EXPECT_EQ(r.points_tested, kRes * kRes);
  const SetFractions f = Fractions(*sample_);
  EXPECT_LE(f.mps, f.gk);
}

TEST_F(SliceSetsTest, Theorem4) {
  const TheoremReport r = VerifyTheorem4(*sample_, 0.05);
  EXPECT_TRUE(r.pass);
  EXPECT_GT(r.points_tested, 0);
  const TheoremReport vacuous = VerifyTheorem4(*sample_, std::numeric_limits<double>::infinity());
  EXPECT_TRUE(vacuous.pass);
  EXPECT_EQ(vacuous.points_tested, 0);
  const TheoremReport zero = VerifyTheorem4(*sample_, 0.0);
  EXPECT_EQ(zero.violations.size(), zero.boundary_violations.size());
}

TEST_F(SliceSetsTest, SignConsistency) {
  const SignReport r = CheckSignConsistency(*sample_);
  EXPECT_EQ(r.points, kRes * kRes);
  EXPECT_LE(r.disagreements, 0);
  for (size_t k = 0; k < sample_->size(); ++k) {
    EXPECT_EQ(sample_->h_bcbf[k] >= -scenario_->sys.spec.validity_margin,
              static_cast<bool>(sample_->in_s[k]))
        << sample_->points[k].transpose();
  }
}

TEST_F(SliceSetsTest, WorkerCountDoesNotMatter) {
  ThreadPool pool(4);
  const SetSample par = SampleSets(*scenario_, kRes, &pool);
  EXPECT_EQ(par.in_s, sample_->in_s);
  EXPECT_EQ(par.inactive_bcbf, sample_->inactive_bcbf);
  EXPECT_EQ(par.inactive_mps, sample_->inactive_mps);
  EXPECT_EQ(par.inactive_gk, sample_->inactive_gk);
  EXPECT_EQ(par.h_bcbf, sample_->h_bcbf);
}

// Hand-built sample for the report logic: a 5x5 grid, everything in S.
SetSample Synthetic() {
  SetSample s;
  s.resolution = 5;
  const int n = 25;
  s.points.assign(n, Vec4(0, 0, 0, 0));
  s.in_s.assign(n, 1);
  s.in_s0.assign(n, 0);
  s.inactive_bcbf.assign(n, 1);
  s.inactive_mps.assign(n, 1);
  s.inactive_gk.assign(n, 1);
  s.h_bcbf.assign(n, 1.0);
  return s;
}

TEST(TheoremReportTest, Theorem3Violation) {
  SetSample s = Synthetic();
  s.inactive_gk[7] = 0;
  const TheoremReport r = VerifyTheorem3(s);
  EXPECT_FALSE(r.pass);
  EXPECT_EQ(r.violations, std::vector<int>{7});
}

TEST(TheoremReportTest, Theorem4InteriorProxy) {
  SetSample s = Synthetic();
  // Point 12 is the grid center. Its 4-neighbor 13 leaves I_BCBF, so it is
  // not an interior test point.
  s.inactive_bcbf[13] = 0;
  s.inactive_gk[12] = 0;
  EXPECT_TRUE(VerifyTheorem4(s, 0.0).pass);
  // A diagonal neighbor outside I_BCBF keeps it interior but marks the
  // violation as boundary-adjacent.
  s.inactive_bcbf[13] = 1;
  s.inactive_bcbf[18] = 0;
  const TheoremReport r = VerifyTheorem4(s, 0.0);
  EXPECT_EQ(r.violations, std::vector<int>{12});
  EXPECT_EQ(r.boundary_violations, std::vector<int>{12});
  // Neighbors outside S do not count against the interior test.
  s.inactive_bcbf[18] = 1;
  s.inactive_bcbf[13] = 0;
  s.in_s[13] = 0;
  const TheoremReport q = VerifyTheorem4(s, 0.0);
  EXPECT_EQ(q.violations, std::vector<int>{12});
  // Low h_bcbf excludes the point.
  s.h_bcbf[12] = 0.01;
  EXPECT_TRUE(VerifyTheorem4(s, 0.05).pass);
}

TEST(SignConsistencyTest, CountsDisagreements) {
  SetSample s = Synthetic();
  s.h_bcbf[3] = -0.2;
  const SignReport r = CheckSignConsistency(s);
  EXPECT_EQ(r.disagreements, 1);
  EXPECT_DOUBLE_EQ(r.max_abs_h, 0.2);
}

TEST(Theorem3PropertyTest, RandomizedGains) {
  for (int seed = 0; seed < 5; ++seed) {
    ScenarioConfig c = BuiltinScenario("di-slice");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> gain(0.5, 2.0);
    c.nominal.gains = PdGains(gain(rng), gain(rng) + 1.0);
    c.backup.gains = PdGains(gain(rng), gain(rng) + 1.0);
    const Scenario s = BuildScenario(c);
    const SetSample sample = SampleSets(s, 9);
    const TheoremReport r = VerifyTheorem3(sample);
    EXPECT_TRUE(r.pass) << "seed " << seed;
    // Brute-force oracle for both predicates.
    const ShieldContext ctx = s.Shield();
    for (size_t k = 0; k < sample.size(); ++k) {
      const State& x = sample.points[k];
      const bool mps = EvaluateCandidate(s.sys, x, 0.0, ctx.monitor_dt).valid;
      bool gk = false;
      for (int j = 1; j <= ctx.GridSize() && !gk; ++j) {
        gk = EvaluateCandidate(s.sys, x, 0.0, ctx.SwitchTime(j)).valid;
      }
      EXPECT_EQ(sample.inactive_mps[k], mps);
      EXPECT_EQ(sample.inactive_gk[k], gk);
      if (mps) EXPECT_TRUE(gk);
    }
  }
}

TEST(SweepHorizonTest, CollapseAndMonotonicity) {
  const Scenario s = BuildScenario(BuiltinScenario("di-slice"));
  const double dt = s.config.monitor_dt;
  const std::vector<SweepRow> rows =
      SweepHorizon(s, {dt, 2 * dt, 5 * dt, s.config.search_horizon}, {9, 13});
  ASSERT_EQ(rows.size(), 8u);
  for (int r = 0; r < 2; ++r) {
    const SweepRow* block = &rows[4 * r];
    EXPECT_EQ(block[0].gk_fraction, block[0].mps_fraction);
    for (int i = 1; i < 4; ++i) {
      EXPECT_GE(block[i].gk_fraction, block[i - 1].gk_fraction);
      EXPECT_EQ(block[i].resolution, block[0].resolution);
    }
    EXPECT_GT(block[3].mean_search_ms, block[0].mean_search_ms);
  }
}

}  // namespace
}  // namespace shield
