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

#ifndef PIPEPLAN_SCHEDULE_H_
#define PIPEPLAN_SCHEDULE_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <set>
#include <string_view>
#include <vector>

#include "pipeplan/plan.h"

namespace pipeplan {

enum class Direction { kForward, kBackward };

std::string_view DirectionName(Direction d);

struct WorkItem {
  std::int64_t minibatch_id = 1;  // 1-based
  int stage_index = 0;            // 0-based position in plan.stages
  int replica_index = 0;          // 0-based within the stage
  Direction direction = Direction::kForward;

  bool operator==(const WorkItem&) const = default;
};

// Round-robin replica owning `minibatch_id` at a stage with `replication`
// workers: (minibatch_id - 1) mod replication. Forward and backward of a
// minibatch therefore land on the same replica.
int ReplicaFor(std::int64_t minibatch_id, int replication);

// Admission window of `stage_index`, counted in consecutive minibatch ids: a
// worker of the stage may run forward m ahead of backward b only when
// m < b + window. The window is the number of machines in stages >=
// stage_index, capped at max_inflight * (input replication). It never grows
// downstream, which keeps the per-worker orders deadlock free. A replica of
// the input stage thus holds min(NOAM, max_inflight) minibatches, stage i of
// a straight n-stage pipeline holds n - i + 1, and the output stage holds one
// per replica.
int AdmissionWindow(const Plan& plan, int stage_index, int max_inflight);

// Minibatches whose inputs have arrived at a worker and are not yet consumed.
struct ReadyQueues {
  std::set<std::int64_t> forward;
  std::set<std::int64_t> backward;
};

// Cursor over one worker's 1F1B sequence. The worker owns every
// `replication`-th minibatch starting at replica_index + 1. Its next forward
// runs when it falls inside the admission window of the oldest minibatch
// still awaiting backward, otherwise that backward runs. In steady state this
// alternates one backward and one forward.
class WorkerState {
 public:
  WorkerState(int stage_index, int replica_index, int replication, int window,
              std::int64_t num_minibatches);

  int stage_index() const { return stage_index_; }
  int replica_index() const { return replica_index_; }
  int window() const { return window_; }

  // Item the policy demands next; nullopt once the worker has finished.
  std::optional<WorkItem> Pending() const;
  bool done() const { return !Pending().has_value(); }
  // Consumes Pending().
  void Advance();

 private:
  std::int64_t GlobalId(std::int64_t local) const;

  int stage_index_;
  int replica_index_;
  int replication_;
  int window_;
  std::int64_t num_local_;
  std::int64_t forwards_done_ = 0;
  std::int64_t backwards_done_ = 0;
};

// The 1F1B decision for one worker: the pending item if its input is in
// `queues`, otherwise idle (nullopt). Never reorders around a missing input.
std::optional<WorkItem> NextWork(const WorkerState& state,
                                 const ReadyQueues& queues);

struct WorkerSchedule {
  int worker_id = 0;  // 0-based, stage-major then replica
  int stage_index = 0;
  int replica_index = 0;
  std::vector<WorkItem> items;
};

// Worker id layout: stage 0 replicas first, then stage 1, ...
std::vector<int> FirstWorkerOfStage(const Plan& plan);

// Static per-worker order for `num_minibatches` minibatches. Depends only on
// the plan, max_inflight and the minibatch count. Throws ArgumentError when
// max_inflight is outside [1, NOAM].
std::vector<WorkerSchedule> BuildSchedule(const Plan& plan, int max_inflight,
                                          std::int64_t num_minibatches);

// CSV with header worker,seq,minibatch,stage,direction.
void WriteScheduleCsv(const std::vector<WorkerSchedule>& schedule,
                      std::ostream& out);

}  // namespace pipeplan

#endif  // PIPEPLAN_SCHEDULE_H_
