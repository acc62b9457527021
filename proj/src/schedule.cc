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

#include <algorithm>
#include <string>

#include "pipeplan/errors.h"

namespace pipeplan {

std::string_view DirectionName(Direction d) {
  return d == Direction::kForward ? "forward" : "backward";
}

int ReplicaFor(std::int64_t minibatch_id, int replication) {
  if (replication < 1) throw ArgumentError("replication must be >= 1");
  if (minibatch_id < 1) throw ArgumentError("minibatch ids start at 1");
  return static_cast<int>((minibatch_id - 1) % replication);
}

int AdmissionWindow(const Plan& plan, int stage_index, int max_inflight) {
  if (stage_index < 0 || stage_index >= plan.num_stages()) {
    throw ArgumentError("stage index out of range");
  }
  if (max_inflight < 1) throw ArgumentError("max_inflight must be >= 1");
  int downstream = 0;
  for (int s = stage_index; s < plan.num_stages(); ++s) {
    downstream += plan.stages[s].replication;
  }
  return std::min(downstream, max_inflight * plan.stages[0].replication);
}

WorkerState::WorkerState(int stage_index, int replica_index, int replication,
                         int window, std::int64_t num_minibatches)
    : stage_index_(stage_index),
      replica_index_(replica_index),
      replication_(replication),
      window_(window) {
  if (replication < 1 || replica_index < 0 || replica_index >= replication) {
    throw ArgumentError("replica index outside the stage's replication");
  }
  if (window < 1) throw ArgumentError("admission window must be >= 1");
  num_local_ = num_minibatches > replica_index
                   ? (num_minibatches - replica_index - 1) / replication + 1
                   : 0;
}

std::int64_t WorkerState::GlobalId(std::int64_t local) const {
  return replica_index_ + 1 + (local - 1) * replication_;
}

std::optional<WorkItem> WorkerState::Pending() const {
  if (backwards_done_ == num_local_) return std::nullopt;
  const bool admit =
      forwards_done_ < num_local_ &&
      (forwards_done_ == backwards_done_ ||
       GlobalId(forwards_done_ + 1) < GlobalId(backwards_done_ + 1) + window_);
  if (admit) {
    return WorkItem{GlobalId(forwards_done_ + 1), stage_index_, replica_index_,
                    Direction::kForward};
  }
  return WorkItem{GlobalId(backwards_done_ + 1), stage_index_, replica_index_,
                  Direction::kBackward};
}

void WorkerState::Advance() {
  const std::optional<WorkItem> item = Pending();
  if (!item) throw ArgumentError("worker has no pending work");
  if (item->direction == Direction::kForward) {
    ++forwards_done_;
  } else {
    ++backwards_done_;
  }
}

std::optional<WorkItem> NextWork(const WorkerState& state,
                                 const ReadyQueues& queues) {
  std::optional<WorkItem> item = state.Pending();
  if (!item) return std::nullopt;
  const auto& queue = item->direction == Direction::kForward ? queues.forward
                                                             : queues.backward;
  if (!queue.contains(item->minibatch_id)) return std::nullopt;
  return item;
}

std::vector<int> FirstWorkerOfStage(const Plan& plan) {
  std::vector<int> first;
  int next = 0;
  for (const Stage& s : plan.stages) {
    first.push_back(next);
    next += s.replication;
  }
  first.push_back(next);
  return first;
}

std::vector<WorkerSchedule> BuildSchedule(const Plan& plan, int max_inflight,
                                          std::int64_t num_minibatches) {
  if (plan.stages.empty()) throw ArgumentError("plan has no stages");
  const int noam = Noam(plan);
  if (max_inflight < 1 || max_inflight > noam) {
    throw ArgumentError("max_inflight must lie in [1, NOAM=" +
                        std::to_string(noam) + "]");
  }
  if (num_minibatches < 0) throw ArgumentError("negative minibatch count");

  std::vector<WorkerSchedule> out;
  int worker_id = 0;
  for (int s = 0; s < plan.num_stages(); ++s) {
    const int replication = plan.stages[s].replication;
    const int window = AdmissionWindow(plan, s, max_inflight);
    for (int r = 0; r < replication; ++r) {
      WorkerSchedule ws{worker_id++, s, r, {}};
      WorkerState state(s, r, replication, window, num_minibatches);
      while (std::optional<WorkItem> item = state.Pending()) {
        ws.items.push_back(*item);
        state.Advance();
      }
      out.push_back(std::move(ws));
    }
  }
  return out;
}

void WriteScheduleCsv(const std::vector<WorkerSchedule>& schedule,
                      std::ostream& out) {
  out << "worker,seq,minibatch,stage,direction\n";
  for (const WorkerSchedule& ws : schedule) {
    for (std::size_t seq = 0; seq < ws.items.size(); ++seq) {
      const WorkItem& item = ws.items[seq];
      out << ws.worker_id << ',' << seq << ',' << item.minibatch_id << ','
          << item.stage_index << ',' << DirectionName(item.direction) << '\n';
    }
  }
}

}  // namespace pipeplan
