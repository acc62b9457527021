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

#ifndef PIPEPLAN_SIMULATOR_H_
#define PIPEPLAN_SIMULATOR_H_

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string_view>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "pipeplan/cost_model.h"
#include "pipeplan/plan.h"
#include "pipeplan/schedule.h"

namespace pipeplan {

// Which parameter version each pass reads.
//  kNaive:          both passes read the stage's latest committed version at
//                   the moment the pass starts computing.
//  kWeightStashing: forward reads latest; backward reuses the forward's
//                   version at that stage.
//  kVerticalSync:   the input stage tags each minibatch with its latest
//                   version at forward start; every stage uses that tag for
//                   both passes.
enum class VersionMode { kNaive, kWeightStashing, kVerticalSync };

VersionMode ParseVersionMode(std::string_view text);
std::string_view VersionModeName(VersionMode mode);

struct SimConfig {
  Plan plan;
  VersionMode mode = VersionMode::kWeightStashing;
  // 0 selects NOAM. 1 runs one minibatch at a time (model parallelism).
  int max_inflight = 0;
  std::int64_t num_minibatches = 100;
  // When false, a sender is blocked until its boundary transfer lands.
  bool overlap_comm = true;
};

// Version v is the stage's weights after updates from minibatches 1..v;
// v == 0 is the initial weights. Entries are write-once.
class VersionLedger {
 public:
  VersionLedger() = default;
  VersionLedger(int num_stages, std::int64_t num_minibatches, bool straight);

  int num_stages() const { return num_stages_; }
  std::int64_t num_minibatches() const { return num_minibatches_; }
  // True when every stage has replication 1.
  bool straight() const { return straight_; }

  // Throws ConsistencyError on a second write to the same key.
  void Record(int stage, std::int64_t minibatch, Direction dir,
              std::int64_t version);
  std::optional<std::int64_t> Find(int stage, std::int64_t minibatch,
                                   Direction dir) const;
  // Throws ArgumentError when absent.
  std::int64_t Get(int stage, std::int64_t minibatch, Direction dir) const;

  void SetLatest(int stage, std::int64_t version);
  std::int64_t latest(int stage) const { return latest_.at(stage); }

  const std::map<std::tuple<int, std::int64_t, Direction>, std::int64_t>&
  entries() const {
    return entries_;
  }

  bool operator==(const VersionLedger&) const = default;

 private:
  int num_stages_ = 0;
  std::int64_t num_minibatches_ = 0;
  bool straight_ = true;
  std::map<std::tuple<int, std::int64_t, Direction>, std::int64_t> entries_;
  std::vector<std::int64_t> latest_;
};

struct TraceRecord {
  double time_start = 0.0;
  double time_end = 0.0;
  int worker = 0;
  std::int64_t minibatch = 0;
  int stage = 0;
  Direction direction = Direction::kForward;
  std::int64_t version_used = 0;

  bool operator==(const TraceRecord&) const = default;
};

struct SimReport {
  double makespan = 0.0;
  bool has_steady_window = false;
  double window_start = 0.0;
  double window_end = 0.0;
  // Minibatches per second over the steady window.
  double steady_throughput = 0.0;
  std::vector<double> per_worker_utilization;
  double comm_bytes_total = 0.0;
  std::vector<int> peak_versions_per_stage;
  std::vector<int> peak_inflight_per_stage;

  bool operator==(const SimReport&) const = default;
};

struct SimResult {
  SimReport report;
  VersionLedger ledger;
  std::vector<TraceRecord> trace;  // completion order
};

// Discrete-event execution of the plan's 1F1B schedule.
//
// Each work item occupies its worker for the stage's summed forward or
// backward layer time. A replicated stage additionally pays
// max(0, weight-sync - compute) on every backward pass, so one replica's
// per-minibatch occupancy equals the max() term of StageTime. Each stage
// boundary is one FIFO link shared by activations and gradients; a transfer
// takes CommTimeActivations of the boundary layer.
//
// Weights commit when a backward pass completes; version v becomes visible
// once minibatches 1..v have all committed at that stage. Events at equal
// timestamps are applied before any worker starts new work; workers then
// start in id order.
//
// The steady window spans the input-stage completion of minibatch
// NOAM + n_stages up to that of minibatch num_minibatches - NOAM.
//
// Throws ArgumentError for invalid configs (including num_minibatches <
// NOAM + 10) and SimulationError on deadlock, naming the blocked worker.
SimResult Run(const SimConfig& cfg, const CostContext& ctx);

struct StalenessViolation {
  int stage = 0;  // 0-based
  std::int64_t minibatch = 0;
  Direction direction = Direction::kForward;
  std::int64_t expected = 0;
  std::int64_t actual = 0;
};

// Version a straight n-stage pipeline must use at 1-based stage i for
// minibatch m with `inflight` admitted minibatches (== n for 1F1B):
// weight stashing and naive (the consistent reference) max(0, m - k_i) with
// k_i = min(n - i + 1, inflight); vertical sync max(0, m - min(n, inflight)).
std::int64_t ExpectedVersion(VersionMode mode, int n_stages, int inflight,
                             int stage_1based, std::int64_t minibatch);

// Compares every ledger entry with ExpectedVersion. In naive mode the
// backward entries are expected to differ. Throws ArgumentError for ledgers
// from replicated plans or a stage-count mismatch.
std::vector<StalenessViolation> StalenessCheck(const VersionLedger& ledger,
                                               VersionMode mode, int n_stages,
                                               int inflight = 0);

// Throws SimulationError when the report has no steady window.
double MeasureThroughput(const SimReport& report);
// |measured - 1/bottleneck| / (1/bottleneck).
double CompareAnalytic(const SimReport& report, const Plan& plan);

void WriteTraceCsv(const std::vector<TraceRecord>& trace, std::ostream& out);
nlohmann::json ReportToJson(const SimReport& report);

}  // namespace pipeplan

#endif  // PIPEPLAN_SIMULATOR_H_
