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

#include "pipeplan/schedule.h"

#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>

#include <gtest/gtest.h>

#include "pipeplan/errors.h"

namespace pipeplan {
namespace {

Plan PlanFromReplications(const std::vector<int>& reps) {
  Plan plan;
  int layer = 1;
  for (int r : reps) {
    plan.stages.push_back({layer, layer, r});
    ++layer;
  }
  FinalizeCounts(plan);
  return plan;
}

std::string Render(const WorkerSchedule& ws, std::size_t count) {
  std::string out;
  for (std::size_t k = 0; k < count && k < ws.items.size(); ++k) {
    const WorkItem& item = ws.items[k];
    if (!out.empty()) out += ',';
    out += (item.direction == Direction::kForward ? 'F' : 'B');
    out += std::to_string(item.minibatch_id);
  }
  return out;
}

// Runs the static orders with untimed message passing: an item may fire once
// its input exists. Returns false if some worker can never proceed.
bool DrainsWithoutDeadlock(const Plan& plan,
                           const std::vector<WorkerSchedule>& schedule) {
  std::set<std::tuple<int, std::int64_t, Direction>> done;
  std::vector<std::size_t> cursor(schedule.size(), 0);
  const int last = plan.num_stages() - 1;
  bool progress = true;
  while (progress) {
    progress = false;
    for (std::size_t w = 0; w < schedule.size(); ++w) {
      while (cursor[w] < schedule[w].items.size()) {
        const WorkItem& it = schedule[w].items[cursor[w]];
        const int s = it.stage_index;
        const std::int64_t mb = it.minibatch_id;
        bool ready;
        if (it.direction == Direction::kForward) {
          ready = s == 0 || done.contains({s - 1, mb, Direction::kForward});
        } else {
          ready = s == last ? done.contains({s, mb, Direction::kForward})
                            : done.contains({s + 1, mb, Direction::kBackward});
        }
        if (!ready) break;
        done.insert({s, mb, it.direction});
        ++cursor[w];
        progress = true;
      }
    }
  }
  for (std::size_t w = 0; w < schedule.size(); ++w) {
    if (cursor[w] != schedule[w].items.size()) return false;
  }
  return true;
}

TEST(ReplicaFor, RoundRobin) {
  EXPECT_EQ(ReplicaFor(1, 1), 0);
  EXPECT_EQ(ReplicaFor(5, 2), 0);
  EXPECT_EQ(ReplicaFor(6, 2), 1);
  EXPECT_EQ(ReplicaFor(9, 3), 2);
  EXPECT_THROW(ReplicaFor(0, 2), ArgumentError);
  EXPECT_THROW(ReplicaFor(3, 0), ArgumentError);
}

TEST(BuildSchedule, FourStageStraightPipeline) {
  Plan plan = PlanFromReplications({1, 1, 1, 1});
  auto schedule = BuildSchedule(plan, 4, 12);
  ASSERT_EQ(schedule.size(), 4u);
  EXPECT_EQ(Render(schedule[0], 10), "F1,F2,F3,F4,B1,F5,B2,F6,B3,F7");
  EXPECT_EQ(Render(schedule[1], 8), "F1,F2,F3,B1,F4,B2,F5,B3");
  EXPECT_EQ(Render(schedule[3], 8), "F1,B1,F2,B2,F3,B3,F4,B4");
  const std::string full = Render(schedule[0], 100);
  EXPECT_EQ(full.substr(full.size() - 18), "F12,B9,B10,B11,B12");
}

TEST(BuildSchedule, DataParallelAlternates) {
  Plan plan = PlanFromReplications({3});
  auto schedule = BuildSchedule(plan, 1, 9);
  ASSERT_EQ(schedule.size(), 3u);
  EXPECT_EQ(Render(schedule[0], 6), "F1,B1,F4,B4,F7,B7");
  EXPECT_EQ(Render(schedule[1], 6), "F2,B2,F5,B5,F8,B8");
  EXPECT_EQ(Render(schedule[2], 6), "F3,B3,F6,B6,F9,B9");
}

TEST(BuildSchedule, ModelParallelIsSequential) {
  Plan plan = PlanFromReplications({1, 1, 1});
  for (const WorkerSchedule& ws : BuildSchedule(plan, 1, 4)) {
    EXPECT_EQ(Render(ws, 8), "F1,B1,F2,B2,F3,B3,F4,B4");
  }
}

TEST(BuildSchedule, RejectsBadInflight) {
  Plan plan = PlanFromReplications({7, 1});
  EXPECT_THROW(BuildSchedule(plan, 0, 10), ArgumentError);
  EXPECT_THROW(BuildSchedule(plan, 3, 10), ArgumentError);
  EXPECT_NO_THROW(BuildSchedule(plan, 2, 10));
}

TEST(AdmissionWindow, Values) {
  Plan straight = PlanFromReplications({1, 1, 1, 1});
  for (int s = 0; s < 4; ++s) EXPECT_EQ(AdmissionWindow(straight, s, 4), 4 - s);
  EXPECT_EQ(AdmissionWindow(straight, 0, 2), 2);
  EXPECT_EQ(AdmissionWindow(straight, 3, 2), 1);
  Plan mixed = PlanFromReplications({2, 1, 2, 1, 1, 1});
  std::vector<int> expected{8, 6, 5, 3, 2, 1};
  for (int s = 0; s < 6; ++s) EXPECT_EQ(AdmissionWindow(mixed, s, 4), expected[s]);
  EXPECT_THROW(AdmissionWindow(mixed, 6, 4), ArgumentError);
}

TEST(BuildSchedule, InputStageHoldsNoam) {
  for (const auto& reps : std::vector<std::vector<int>>{
           {1, 1, 1, 1}, {7, 1}, {2, 1, 2, 1, 1, 1}, {3, 2, 1}, {2, 3}}) {
    Plan plan = PlanFromReplications(reps);
    auto schedule = BuildSchedule(plan, plan.noam, 60);
    for (const WorkerSchedule& ws : schedule) {
      int inflight = 0, peak = 0;
      for (const WorkItem& it : ws.items) {
        inflight += it.direction == Direction::kForward ? 1 : -1;
        peak = std::max(peak, inflight);
      }
      EXPECT_EQ(inflight, 0);
      if (ws.stage_index == 0) {
        EXPECT_EQ(peak, plan.noam) << ConfigString(plan);
      }
      if (ws.stage_index == plan.num_stages() - 1) EXPECT_EQ(peak, 1);
    }
  }
}

TEST(BuildSchedule, RandomPlansNeverDeadlock) {
  std::mt19937_64 gen(99);
  std::uniform_int_distribution<int> stages(1, 6), rep(1, 3);
  Plan regression = PlanFromReplications({2, 1, 2, 1, 1, 1});
  EXPECT_TRUE(DrainsWithoutDeadlock(regression, BuildSchedule(regression, 4, 40)));
  for (int c = 0; c < 300; ++c) {
    std::vector<int> reps(stages(gen));
    for (int& r : reps) r = rep(gen);
    Plan plan = PlanFromReplications(reps);
    const int inflight =
        std::uniform_int_distribution<int>(1, plan.noam)(gen);
    auto schedule = BuildSchedule(plan, inflight, 37);
    ASSERT_TRUE(DrainsWithoutDeadlock(plan, schedule))
        << ConfigString(plan) << " inflight=" << inflight;
    // Every minibatch visits every stage once per direction, on its replica.
    std::set<std::tuple<int, std::int64_t, Direction>> seen;
    for (const WorkerSchedule& ws : schedule) {
      for (const WorkItem& it : ws.items) {
        EXPECT_EQ(it.replica_index,
                  ReplicaFor(it.minibatch_id, reps[it.stage_index]));
        EXPECT_TRUE(seen.insert({it.stage_index, it.minibatch_id, it.direction})
                        .second);
      }
    }
    EXPECT_EQ(seen.size(), 2u * 37u * reps.size());
  }
}

TEST(NextWork, WaitsForMissingInput) {
  WorkerState state(1, 0, 1, 3, 5);
  ReadyQueues queues;
  EXPECT_FALSE(NextWork(state, queues).has_value());
  queues.forward.insert(2);
  EXPECT_FALSE(NextWork(state, queues).has_value());
  queues.forward.insert(1);
  auto item = NextWork(state, queues);
  ASSERT_TRUE(item.has_value());
  EXPECT_EQ(item->minibatch_id, 1);
  EXPECT_EQ(item->direction, Direction::kForward);
}

TEST(WorkerState, FinishesAfterAllBackwards) {
  WorkerState state(0, 1, 2, 2, 5);  // owns 2 and 4
  int steps = 0;
  while (!state.done()) {
    state.Advance();
    ++steps;
  }
  EXPECT_EQ(steps, 4);
  EXPECT_THROW(state.Advance(), ArgumentError);
}

TEST(WriteScheduleCsv, Format) {
  Plan plan = PlanFromReplications({1, 1});
  std::ostringstream out;
  WriteScheduleCsv(BuildSchedule(plan, 2, 2), out);
  EXPECT_EQ(out.str(),
            "worker,seq,minibatch,stage,direction\n"
            "0,0,1,0,forward\n0,1,2,0,forward\n0,2,1,0,backward\n"
            "0,3,2,0,backward\n1,0,1,1,forward\n1,1,1,1,backward\n"
            "1,2,2,1,forward\n1,3,2,1,backward\n");
}

}  // namespace
}  // namespace pipeplan
