/* Copyright 2026 The Pipeplan Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "pipeplan/simulator.h"

#include <algorithm>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "pipeplan/errors.h"
#include "pipeplan/partitioner.h"
#include "test_profiles.h"

namespace pipeplan {
namespace {

using testing::BalancedProfile;
using testing::MakeProfile;
using testing::RandomProfile;

Plan StraightPlan(const CostContext& ctx) {
  std::vector<int> reps(ctx.num_layers(), 1), lasts;
  for (int l = 1; l <= ctx.num_layers(); ++l) lasts.push_back(l);
  return MakePlan(ctx, reps, lasts);
}

SimResult RunStraight(int n, VersionMode mode, std::int64_t minibatches,
                      int max_inflight = 0) {
  CostContext ctx(BalancedProfile(n, 1.0), {n, 1.0, 4.0});
  SimConfig cfg;
  cfg.plan = StraightPlan(ctx);
  cfg.mode = mode;
  cfg.num_minibatches = minibatches;
  cfg.max_inflight = max_inflight;
  return pipeplan::Run(cfg, ctx);
}

TEST(Simulator, BalancedPipelineSteadyState) {
  SimResult r = RunStraight(4, VersionMode::kWeightStashing, 100);
  ASSERT_TRUE(r.report.has_steady_window);
  EXPECT_NEAR(MeasureThroughput(r.report), 1.0, 1e-9);
  ASSERT_EQ(r.report.per_worker_utilization.size(), 4u);
  for (double u : r.report.per_worker_utilization) EXPECT_NEAR(u, 1.0, 1e-9);
  EXPECT_EQ(r.report.peak_inflight_per_stage, (std::vector<int>{4, 3, 2, 1}));
  EXPECT_EQ(r.report.comm_bytes_total, 0.0);
}

TEST(Simulator, VersionsOfMinibatchFive) {
  using D = Direction;
  SimResult stash = RunStraight(4, VersionMode::kWeightStashing, 20);
  EXPECT_EQ(stash.ledger.Get(0, 5, D::kForward), 1);
  EXPECT_EQ(stash.ledger.Get(0, 5, D::kBackward), 1);
  SimResult vsync = RunStraight(4, VersionMode::kVerticalSync, 20);
  for (int s = 0; s < 4; ++s) {
    EXPECT_EQ(vsync.ledger.Get(s, 5, D::kForward), 1);
    EXPECT_EQ(vsync.ledger.Get(s, 5, D::kBackward), 1);
  }
  SimResult naive = RunStraight(4, VersionMode::kNaive, 20);
  EXPECT_EQ(naive.ledger.Get(0, 5, D::kForward), 1);
  EXPECT_EQ(naive.ledger.Get(0, 5, D::kBackward), 4);
}

TEST(ExpectedVersion, ClosedForms) {
  using M = VersionMode;
  for (int i = 1; i <= 4; ++i) {
    EXPECT_EQ(ExpectedVersion(M::kWeightStashing, 4, 4, i, 5), i);
    EXPECT_EQ(ExpectedVersion(M::kVerticalSync, 4, 4, i, 5), 1);
    EXPECT_EQ(ExpectedVersion(M::kWeightStashing, 4, 4, i, 50), 45 + i);
    EXPECT_EQ(ExpectedVersion(M::kWeightStashing, 4, 4, i, 1), 0);
    EXPECT_EQ(ExpectedVersion(M::kVerticalSync, 4, 4, i, 4), 0);
  }
}

TEST(StalenessCheck, PinnedModesMatchEquations) {
  for (int n : {1, 2, 3, 4}) {
    for (VersionMode mode :
         {VersionMode::kWeightStashing, VersionMode::kVerticalSync}) {
      SimResult r = RunStraight(n, mode, 50);
      EXPECT_TRUE(StalenessCheck(r.ledger, mode, n).empty())
          << VersionModeName(mode) << " n=" << n;
      // The closed forms spelled out once more.
      for (int i = 1; i <= n; ++i) {
        for (std::int64_t m = n + 1; m <= 50; ++m) {
          const std::int64_t want =
              mode == VersionMode::kVerticalSync ? m - n : m - n + i - 1;
          EXPECT_EQ(r.ledger.Get(i - 1, m, Direction::kForward), want);
          EXPECT_EQ(r.ledger.Get(i - 1, m, Direction::kBackward), want);
        }
      }
    }
  }
}

TEST(StalenessCheck, NaiveMismatchesEverySteadyMinibatch) {
  for (int n : {2, 3, 4}) {
    SimResult r = RunStraight(n, VersionMode::kNaive, 50);
    EXPECT_FALSE(StalenessCheck(r.ledger, VersionMode::kNaive, n).empty());
    for (std::int64_t m = n + 1; m <= 50 - n; ++m) {
      EXPECT_NE(r.ledger.Get(0, m, Direction::kForward),
                r.ledger.Get(0, m, Direction::kBackward))
          << "n=" << n << " m=" << m;
    }
    EXPECT_EQ(r.report.peak_versions_per_stage, std::vector<int>(n, 0));
  }
}

TEST(StalenessCheck, ReducedInflight) {
  SimResult r = RunStraight(4, VersionMode::kWeightStashing, 30, 2);
  EXPECT_TRUE(StalenessCheck(r.ledger, VersionMode::kWeightStashing, 4, 2).empty());
  EXPECT_FALSE(StalenessCheck(r.ledger, VersionMode::kWeightStashing, 4).empty());
}

TEST(StalenessCheck, RejectsReplicatedLedgers) {
  CostContext ctx(BalancedProfile(4, 1.0), {4, 1.0, 4.0});
  SimConfig cfg;
  cfg.plan = MakePlan(ctx, {2, 1}, {2, 4});
  cfg.num_minibatches = 30;
  SimResult r = pipeplan::Run(cfg, ctx);
  EXPECT_THROW(StalenessCheck(r.ledger, cfg.mode, 2), ArgumentError);
  SimResult s = RunStraight(3, VersionMode::kWeightStashing, 30);
  EXPECT_THROW(StalenessCheck(s.ledger, VersionMode::kWeightStashing, 4),
               ArgumentError);
}

TEST(Simulator, MemoryPerStage) {
  for (int n = 1; n <= 7; ++n) {
    SimResult r = RunStraight(n, VersionMode::kWeightStashing, 40);
    for (int i = 1; i <= n; ++i) {
      EXPECT_EQ(r.report.peak_inflight_per_stage[i - 1], n - i + 1);
      EXPECT_GE(r.report.peak_versions_per_stage[i - 1], 1);
      EXPECT_LE(r.report.peak_versions_per_stage[i - 1], n - i + 1);
    }
  }
}

TEST(Simulator, SerialMakespanWithOneInFlight) {
  // Three stages with activation traffic on both boundaries.
  ModelProfile p = MakeProfile({1.0, 2.0, 0.5}, {3, 5, 0}, {0, 0, 0});
  CostContext ctx(p, {3, 4.0, 1.0});
  SimConfig cfg;
  cfg.plan = StraightPlan(ctx);
  cfg.max_inflight = 1;
  cfg.num_minibatches = 20;
  SimResult r = pipeplan::Run(cfg, ctx);
  const double per = 3.5 + 2 * (3.0 / 4.0 + 5.0 / 4.0);
  EXPECT_NEAR(r.report.makespan, 20 * per, 1e-9);
  EXPECT_NEAR(MeasureThroughput(r.report), 1.0 / per, 1e-9);
}

TEST(Simulator, SlowStageSetsThroughput) {
  ModelProfile p = MakeProfile({1.0, 2.0, 1.0, 1.0}, {0, 0, 0, 0}, {0, 0, 0, 0});
  CostContext ctx(p, {4, 1.0, 4.0});
  SimConfig cfg;
  cfg.plan = StraightPlan(ctx);
  cfg.num_minibatches = 100;
  SimResult r = pipeplan::Run(cfg, ctx);
  EXPECT_NEAR(MeasureThroughput(r.report), 0.5, 0.005);
  EXPECT_LT(CompareAnalytic(r.report, cfg.plan), 0.01);
}

TEST(Simulator, SyncDominatedDataParallel) {
  ModelProfile p = MakeProfile({0.1, 0.1}, {10, 0}, {500, 1500});
  CostContext ctx(p, {4, 1000.0, 4.0});
  SimConfig cfg;
  cfg.plan = DataParallelPlan(ctx, 4);
  cfg.num_minibatches = 60;
  SimResult r = pipeplan::Run(cfg, ctx);
  ASSERT_GT(ctx.WeightSyncTime(1, 2, 4), ctx.ComputeTime(1, 2));
  EXPECT_NEAR(MeasureThroughput(r.report), 1.0 / ctx.StageTime(1, 2, 4), 1e-9);
  // One per-worker share of the parameter exchange per minibatch.
  EXPECT_NEAR(r.report.comm_bytes_total, 60 * 0.75 * 8000.0, 1e-6);
}

TEST(Simulator, TransferBytesCounted) {
  ModelProfile p = MakeProfile({1.0, 1.0}, {7, 0}, {1, 1});
  CostContext ctx(p, {2, 100.0, 4.0});
  SimConfig cfg;
  cfg.plan = StraightPlan(ctx);
  cfg.num_minibatches = 25;
  EXPECT_DOUBLE_EQ(pipeplan::Run(cfg, ctx).report.comm_bytes_total, 25 * 2 * 7 * 4.0);
}

TEST(Simulator, NoOverlapIsNeverFaster) {
  std::mt19937_64 gen(17);
  for (int c = 0; c < 20; ++c) {
    CostContext ctx(RandomProfile(gen, 6), {4, 1.0, 4.0});
    SimConfig cfg;
    cfg.plan = Solve(ctx);
    cfg.num_minibatches = 40;
    const double overlapped = pipeplan::Run(cfg, ctx).report.makespan;
    cfg.overlap_comm = false;
    EXPECT_GE(pipeplan::Run(cfg, ctx).report.makespan, overlapped - 1e-9);
  }
}

TEST(Simulator, RandomPlansRunToCompletion) {
  std::mt19937_64 gen(23);
  for (int c = 0; c < 150; ++c) {
    const int n = std::uniform_int_distribution<int>(2, 8)(gen);
    const int m = std::uniform_int_distribution<int>(1, 6)(gen);
    CostContext ctx(RandomProfile(gen, n), {m, 2.0, 4.0});
    for (VersionMode mode : {VersionMode::kNaive, VersionMode::kWeightStashing,
                             VersionMode::kVerticalSync}) {
      SimConfig cfg;
      cfg.plan = Solve(ctx);
      cfg.mode = mode;
      cfg.num_minibatches = cfg.plan.noam + 25;
      SimResult r;
      ASSERT_NO_THROW(r = pipeplan::Run(cfg, ctx)) << ConfigString(cfg.plan);
      const int k = cfg.plan.num_stages();
      EXPECT_EQ(r.trace.size(), 2u * k * cfg.num_minibatches);
      EXPECT_EQ(r.ledger.entries().size(), 2u * k * cfg.num_minibatches);
      for (double u : r.report.per_worker_utilization) {
        EXPECT_GE(u, 0.0);
        EXPECT_LE(u, 1.0 + 1e-12);
      }
      for (std::int64_t mb = 1; mb <= cfg.num_minibatches; ++mb) {
        for (int s = 0; s < k; ++s) {
          const auto f = r.ledger.Get(s, mb, Direction::kForward);
          const auto b = r.ledger.Get(s, mb, Direction::kBackward);
          EXPECT_LT(f, mb);
          if (mode != VersionMode::kNaive) EXPECT_EQ(f, b);
          if (mode == VersionMode::kVerticalSync) {
            EXPECT_EQ(f, r.ledger.Get(0, mb, Direction::kForward));
          }
        }
      }
      if (cfg.plan.is_straight() && mode != VersionMode::kNaive) {
        EXPECT_TRUE(StalenessCheck(r.ledger, mode, k).empty());
      }
    }
  }
}

TEST(Simulator, ThroughputMatchesBottleneckOnVggLike) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    CostContext ctx(SynthProfile(SynthKind::kVggLike, 16, seed), {8, 1e9, 4.0});
    SimConfig cfg;
    cfg.plan = Solve(ctx);
    cfg.num_minibatches = 1000;
    EXPECT_LT(CompareAnalytic(pipeplan::Run(cfg, ctx).report, cfg.plan), 0.01)
        << ConfigString(cfg.plan);
  }
}

TEST(Simulator, Deterministic) {
  CostContext ctx(SynthProfile(SynthKind::kVggLike, 12, 4), {6, 5e8, 4.0});
  SimConfig cfg;
  cfg.plan = Solve(ctx);
  cfg.num_minibatches = 60;
  SimResult a = pipeplan::Run(cfg, ctx);
  SimResult b = pipeplan::Run(cfg, ctx);
  EXPECT_EQ(a.report, b.report);
  EXPECT_EQ(a.ledger, b.ledger);
  EXPECT_EQ(a.trace, b.trace);
  std::ostringstream ta, tb;
  WriteTraceCsv(a.trace, ta);
  WriteTraceCsv(b.trace, tb);
  EXPECT_EQ(ta.str(), tb.str());
  EXPECT_EQ(ReportToJson(a.report).dump(), ReportToJson(b.report).dump());
}

TEST(Simulator, RejectsBadConfigs) {
  CostContext ctx(BalancedProfile(4, 1.0), {4, 1.0, 4.0});
  SimConfig cfg;
  cfg.plan = StraightPlan(ctx);
  cfg.num_minibatches = 13;
  EXPECT_THROW(pipeplan::Run(cfg, ctx), ArgumentError);
  cfg.num_minibatches = 14;
  EXPECT_NO_THROW(pipeplan::Run(cfg, ctx));
  cfg.max_inflight = 5;
  EXPECT_THROW(pipeplan::Run(cfg, ctx), ArgumentError);
  cfg.max_inflight = 0;
  cfg.plan.stages[3].last_layer = 5;
  EXPECT_THROW(pipeplan::Run(cfg, ctx), ArgumentError);
}

TEST(VersionLedger, WriteOnce) {
  VersionLedger ledger(2, 5, true);
  ledger.Record(1, 3, Direction::kForward, 2);
  EXPECT_EQ(ledger.Get(1, 3, Direction::kForward), 2);
  EXPECT_FALSE(ledger.Find(1, 3, Direction::kBackward).has_value());
  EXPECT_THROW(ledger.Get(1, 3, Direction::kBackward), ArgumentError);
  EXPECT_THROW(ledger.Record(1, 3, Direction::kForward, 2), ConsistencyError);
}

TEST(VersionMode, Names) {
  EXPECT_EQ(ParseVersionMode("stash"), VersionMode::kWeightStashing);
  EXPECT_EQ(ParseVersionMode("vertical_sync"), VersionMode::kVerticalSync);
  EXPECT_EQ(ParseVersionMode("naive"), VersionMode::kNaive);
  EXPECT_THROW(ParseVersionMode("bsp"), ArgumentError);
  for (VersionMode m : {VersionMode::kNaive, VersionMode::kWeightStashing,
                        VersionMode::kVerticalSync}) {
    EXPECT_EQ(ParseVersionMode(VersionModeName(m)), m);
  }
}

TEST(WriteTraceCsv, HeaderAndRows) {
  SimResult r = RunStraight(2, VersionMode::kWeightStashing, 12);
  std::ostringstream out;
  WriteTraceCsv(r.trace, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "time_start,time_end,worker,minibatch,stage,direction,version_used");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 48);
}

TEST(MeasureThroughput, NoWindowThrows) {
  SimReport report;
  EXPECT_THROW(MeasureThroughput(report), SimulationError);
}

}  // namespace
}  // namespace pipeplan
