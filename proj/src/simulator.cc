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
#include <cmath>
#include <iomanip>
#include <queue>
#include <sstream>
#include <string>

#include "pipeplan/errors.h"

namespace pipeplan {

VersionMode ParseVersionMode(std::string_view text) {
  if (text == "naive" || text == "naive_pipeline") return VersionMode::kNaive;
  if (text == "stash" || text == "weight_stashing") {
    return VersionMode::kWeightStashing;
  }
  if (text == "vsync" || text == "vertical_sync") {
    return VersionMode::kVerticalSync;
  }
  throw ArgumentError("unknown version mode '" + std::string(text) + "'");
}

std::string_view VersionModeName(VersionMode mode) {
  switch (mode) {
    case VersionMode::kNaive:
      return "naive_pipeline";
    case VersionMode::kWeightStashing:
      return "weight_stashing";
    case VersionMode::kVerticalSync:
      return "vertical_sync";
  }
  return "unknown";
}

VersionLedger::VersionLedger(int num_stages, std::int64_t num_minibatches,
                             bool straight)
    : num_stages_(num_stages),
      num_minibatches_(num_minibatches),
      straight_(straight),
      latest_(num_stages, 0) {}

void VersionLedger::Record(int stage, std::int64_t minibatch, Direction dir,
                           std::int64_t version) {
  const auto [it, inserted] = entries_.emplace(std::tuple{stage, minibatch, dir}, version);
  if (!inserted) {
    throw ConsistencyError("ledger entry for stage " + std::to_string(stage) +
                           ", minibatch " + std::to_string(minibatch) +
                           " written twice");
  }
}

std::optional<std::int64_t> VersionLedger::Find(int stage, std::int64_t minibatch,
                                                Direction dir) const {
  auto it = entries_.find({stage, minibatch, dir});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::int64_t VersionLedger::Get(int stage, std::int64_t minibatch,
                                Direction dir) const {
  std::optional<std::int64_t> v = Find(stage, minibatch, dir);
  if (!v) {
    throw ArgumentError("no ledger entry for stage " + std::to_string(stage) +
                        ", minibatch " + std::to_string(minibatch) + " " +
                        std::string(DirectionName(dir)));
  }
  return *v;
}

void VersionLedger::SetLatest(int stage, std::int64_t version) {
  latest_.at(stage) = version;
}

namespace {

enum class EventKind { kItemDone, kArrival };

struct Event {
  double time;
  int worker;  // worker the event is delivered to
  Direction direction;
  std::int64_t minibatch;
  EventKind kind;
  std::uint64_t seq;
  // kArrival only: sender to release when communication does not overlap.
  int sender = -1;
  double start = 0.0;  // kItemDone only
};

// (time, worker id, backward first, minibatch id), then insertion order.
struct EventAfter {
  bool operator()(const Event& a, const Event& b) const {
    const auto key = [](const Event& e) {
      return std::tuple{e.time, e.worker, e.direction == Direction::kForward,
                        e.minibatch, e.seq};
    };
    return key(a) > key(b);
  }
};

struct WorkerRuntime {
  explicit WorkerRuntime(WorkerState s) : state(s) {}

  WorkerState state;
  ReadyQueues queues;
  bool busy = false;
  int blocked_on_transfers = 0;
  int active = 0;
  int peak_active = 0;
  std::map<std::int64_t, std::int64_t> stash;  // minibatch -> version
  int peak_stash = 0;
  std::vector<std::pair<double, double>> busy_intervals;
};

class Engine {
 public:
  Engine(const SimConfig& cfg, const CostContext& ctx)
      : cfg_(cfg), ctx_(ctx), plan_(cfg.plan) {
    try {
      ValidatePlan(plan_, ctx_.num_layers());
    } catch (const ValidationError& e) {
      throw ArgumentError(std::string("plan does not match profile: ") + e.what());
    }
    noam_ = Noam(plan_);
    inflight_ = cfg_.max_inflight == 0 ? noam_ : cfg_.max_inflight;
    if (inflight_ < 1 || inflight_ > noam_) {
      throw ArgumentError("max_inflight must lie in [1, NOAM=" +
                          std::to_string(noam_) + "]");
    }
    if (cfg_.num_minibatches < noam_ + 10) {
      throw ArgumentError("num_minibatches must be at least NOAM + 10 = " +
                          std::to_string(noam_ + 10));
    }
    num_stages_ = plan_.num_stages();
    first_worker_ = FirstWorkerOfStage(plan_);
    for (int s = 0; s < num_stages_; ++s) {
      const Stage& st = plan_.stages[s];
      const int window = AdmissionWindow(plan_, s, inflight_);
      for (int r = 0; r < st.replication; ++r) {
        workers_.push_back(WorkerRuntime{
            WorkerState(s, r, st.replication, window, cfg_.num_minibatches)});
        stage_of_.push_back(s);
      }
      fwd_time_.push_back(ctx_.ForwardTime(st.first_layer, st.last_layer));
      const double compute = ctx_.ComputeTime(st.first_layer, st.last_layer);
      const double sync = ctx_.WeightSyncTime(st.first_layer, st.last_layer, st.replication);
      bwd_time_.push_back(ctx_.BackwardTime(st.first_layer, st.last_layer) +
                          std::max(0.0, sync - compute));
      sync_bytes_.push_back(
          st.replication > 1
              ? static_cast<double>(st.replication - 1) / st.replication *
                    ctx_.ParamBytes(st.first_layer, st.last_layer)
              : 0.0);
      if (s + 1 < num_stages_) {
        link_time_.push_back(ctx_.CommTimeActivations(st.last_layer));
        link_bytes_.push_back(
            static_cast<double>(ctx_.profile().layer(st.last_layer).activation_elems) *
            ctx_.hw().bytes_per_elem);
      }
    }
    link_free_.assign(std::max(0, num_stages_ - 1), 0.0);
    committed_.assign(num_stages_, std::vector<char>(cfg_.num_minibatches + 1, 0));
    tag_.assign(cfg_.num_minibatches + 1, 0);
    completion_.assign(cfg_.num_minibatches + 1, -1.0);
    result_.ledger = VersionLedger(num_stages_, cfg_.num_minibatches, plan_.is_straight());

    // Input data is always available to the input stage.
    for (int w = first_worker_[0]; w < first_worker_[1]; ++w) {
      for (std::int64_t mb = 1; mb <= cfg_.num_minibatches; ++mb) {
        if (ReplicaFor(mb, plan_.stages[0].replication) == w - first_worker_[0]) {
          workers_[w].queues.forward.insert(mb);
        }
      }
    }
  }

  SimResult Execute() {
    double now = 0.0;
    StartIdleWorkers(now);
    while (!events_.empty()) {
      now = events_.top().time;
      while (!events_.empty() && events_.top().time == now) {
        const Event e = events_.top();
        events_.pop();
        Handle(e);
      }
      StartIdleWorkers(now);
    }
    for (std::size_t w = 0; w < workers_.size(); ++w) {
      if (std::optional<WorkItem> item = workers_[w].state.Pending()) {
        std::ostringstream os;
        os << "deadlock at t=" << now << ": worker " << w << " (stage "
           << item->stage_index << ", replica " << item->replica_index
           << ") blocked waiting for " << DirectionName(item->direction)
           << " input of minibatch " << item->minibatch_id;
        throw SimulationError(os.str());
      }
    }
    Summarize(now);
    return std::move(result_);
  }

 private:
  int WorkerFor(int stage, std::int64_t minibatch) const {
    return first_worker_[stage] + ReplicaFor(minibatch, plan_.stages[stage].replication);
  }

  void Push(Event e) {
    e.seq = next_seq_++;
    events_.push(e);
  }

  void StartIdleWorkers(double now) {
    for (std::size_t w = 0; w < workers_.size(); ++w) {
      WorkerRuntime& rt = workers_[w];
      if (rt.busy || rt.blocked_on_transfers > 0) continue;
      std::optional<WorkItem> item = NextWork(rt.state, rt.queues);
      if (!item) continue;
      Start(static_cast<int>(w), *item, now);
    }
  }

  void Start(int w, const WorkItem& item, double now) {
    WorkerRuntime& rt = workers_[w];
    const int s = item.stage_index;
    const std::int64_t mb = item.minibatch_id;
    auto& queue = item.direction == Direction::kForward ? rt.queues.forward
                                                        : rt.queues.backward;
    queue.erase(mb);
    rt.state.Advance();
    rt.busy = true;

    std::int64_t version = 0;
    if (item.direction == Direction::kForward) {
      if (s == 0) tag_[mb] = latest_of(0);
      switch (cfg_.mode) {
        case VersionMode::kNaive:
          version = latest_of(s);
          break;
        case VersionMode::kWeightStashing:
          version = latest_of(s);
          rt.stash[mb] = version;
          break;
        case VersionMode::kVerticalSync:
          version = tag_[mb];
          if (version > latest_of(s)) {
            throw SimulationError("vertical sync: version " + std::to_string(version) +
                                  " not yet committed at stage " + std::to_string(s));
          }
          rt.stash[mb] = version;
          break;
      }
      ++rt.active;
      rt.peak_active = std::max(rt.peak_active, rt.active);
      rt.peak_stash = std::max(rt.peak_stash, static_cast<int>(rt.stash.size()));
    } else {
      switch (cfg_.mode) {
        case VersionMode::kNaive:
          version = latest_of(s);
          break;
        case VersionMode::kWeightStashing:
        case VersionMode::kVerticalSync:
          version = rt.stash.at(mb);
          break;
      }
    }
    result_.ledger.Record(s, mb, item.direction, version);
    versions_in_flight_[{w, mb, item.direction}] = version;

    const double duration = item.direction == Direction::kForward ? fwd_time_[s]
                                                                  : bwd_time_[s];
    Event done{now + duration, w, item.direction, mb, EventKind::kItemDone, 0};
    done.start = now;
    Push(done);
  }

  std::int64_t latest_of(int stage) const { return result_.ledger.latest(stage); }

  void Commit(int stage, std::int64_t mb) {
    committed_[stage][mb] = 1;
    std::int64_t v = latest_of(stage);
    while (v + 1 <= cfg_.num_minibatches && committed_[stage][v + 1]) ++v;
    result_.ledger.SetLatest(stage, v);
  }

  void Transfer(int link, int sender, int receiver, Direction dir,
                std::int64_t mb, double now) {
    const double start = std::max(now, link_free_[link]);
    const double end = start + link_time_[link];
    link_free_[link] = end;
    result_.report.comm_bytes_total += link_bytes_[link];
    Event arrival{end, receiver, dir, mb, EventKind::kArrival, 0};
    if (!cfg_.overlap_comm) {
      arrival.sender = sender;
      ++workers_[sender].blocked_on_transfers;
    }
    Push(arrival);
  }

  void Handle(const Event& e) {
    WorkerRuntime& rt = workers_[e.worker];
    const int s = stage_of_[e.worker];
    if (e.kind == EventKind::kArrival) {
      auto& queue = e.direction == Direction::kForward ? rt.queues.forward
                                                       : rt.queues.backward;
      queue.insert(e.minibatch);
      if (e.sender >= 0) --workers_[e.sender].blocked_on_transfers;
      return;
    }

    rt.busy = false;
    rt.busy_intervals.emplace_back(e.start, e.time);
    const auto key = std::tuple{e.worker, e.minibatch, e.direction};
    result_.trace.push_back({e.start, e.time, e.worker, e.minibatch, s, e.direction,
                             versions_in_flight_.at(key)});
    versions_in_flight_.erase(key);

    if (e.direction == Direction::kForward) {
      if (s + 1 < num_stages_) {
        Transfer(s, e.worker, WorkerFor(s + 1, e.minibatch), Direction::kForward,
                 e.minibatch, e.time);
      } else {
        rt.queues.backward.insert(e.minibatch);
      }
      return;
    }

    Commit(s, e.minibatch);
    rt.stash.erase(e.minibatch);
    --rt.active;
    result_.report.comm_bytes_total += sync_bytes_[s];
    if (s > 0) {
      Transfer(s - 1, e.worker, WorkerFor(s - 1, e.minibatch), Direction::kBackward,
               e.minibatch, e.time);
    } else {
      completion_[e.minibatch] = e.time;
    }
  }

  void Summarize(double makespan) {
    SimReport& report = result_.report;
    report.makespan = makespan;
    report.peak_inflight_per_stage.assign(num_stages_, 0);
    report.peak_versions_per_stage.assign(num_stages_, 0);
    for (std::size_t w = 0; w < workers_.size(); ++w) {
      const int s = stage_of_[w];
      report.peak_inflight_per_stage[s] =
          std::max(report.peak_inflight_per_stage[s], workers_[w].peak_active);
      report.peak_versions_per_stage[s] =
          std::max(report.peak_versions_per_stage[s], workers_[w].peak_stash);
    }

    const std::int64_t first = noam_ + num_stages_;
    const std::int64_t last = cfg_.num_minibatches - noam_;
    report.per_worker_utilization.assign(workers_.size(), 0.0);
    if (last <= first) return;
    const double t0 = completion_[first];
    const double t1 = completion_[last];
    if (!(t1 > t0)) return;

    std::int64_t completed = 0;
    for (std::int64_t mb = 1; mb <= cfg_.num_minibatches; ++mb) {
      if (completion_[mb] >= t0 && completion_[mb] < t1) ++completed;
    }
    report.has_steady_window = true;
    report.window_start = t0;
    report.window_end = t1;
    report.steady_throughput = static_cast<double>(completed) / (t1 - t0);
    for (std::size_t w = 0; w < workers_.size(); ++w) {
      double busy = 0.0;
      for (const auto& [a, b] : workers_[w].busy_intervals) {
        busy += std::max(0.0, std::min(b, t1) - std::max(a, t0));
      }
      report.per_worker_utilization[w] = busy / (t1 - t0);
    }
  }

  const SimConfig& cfg_;
  const CostContext& ctx_;
  const Plan& plan_;
  int noam_ = 1;
  int inflight_ = 1;
  int num_stages_ = 0;
  std::vector<int> first_worker_;
  std::vector<int> stage_of_;
  std::vector<WorkerRuntime> workers_;
  std::vector<double> fwd_time_;
  std::vector<double> bwd_time_;
  std::vector<double> sync_bytes_;
  std::vector<double> link_time_;
  std::vector<double> link_bytes_;
  std::vector<double> link_free_;
  std::vector<std::vector<char>> committed_;
  std::vector<std::int64_t> tag_;
  std::vector<double> completion_;
  std::map<std::tuple<int, std::int64_t, Direction>, std::int64_t> versions_in_flight_;
  std::priority_queue<Event, std::vector<Event>, EventAfter> events_;
  std::uint64_t next_seq_ = 0;
  SimResult result_;
};

}  // namespace

SimResult Run(const SimConfig& cfg, const CostContext& ctx) {
  return Engine(cfg, ctx).Execute();
}

std::int64_t ExpectedVersion(VersionMode mode, int n_stages, int inflight,
                             int stage_1based, std::int64_t minibatch) {
  if (mode == VersionMode::kVerticalSync) {
    return std::max<std::int64_t>(0, minibatch - std::min(n_stages, inflight));
  }
  const int depth = std::min(n_stages - stage_1based + 1, inflight);
  return std::max<std::int64_t>(0, minibatch - depth);
}

std::vector<StalenessViolation> StalenessCheck(const VersionLedger& ledger,
                                               VersionMode mode, int n_stages,
                                               int inflight) {
  if (!ledger.straight()) {
    throw ArgumentError("staleness equations are defined for straight pipelines only");
  }
  if (ledger.num_stages() != n_stages) {
    throw ArgumentError("ledger has " + std::to_string(ledger.num_stages()) +
                        " stages, expected " + std::to_string(n_stages));
  }
  if (inflight == 0) inflight = n_stages;
  std::vector<StalenessViolation> out;
  for (const auto& [key, actual] : ledger.entries()) {
    const auto& [stage, minibatch, dir] = key;
    const std::int64_t expected =
        ExpectedVersion(mode, n_stages, inflight, stage + 1, minibatch);
    if (actual != expected) out.push_back({stage, minibatch, dir, expected, actual});
  }
  return out;
}

double MeasureThroughput(const SimReport& report) {
  if (!report.has_steady_window) {
    throw SimulationError("no steady-state window; simulate more minibatches");
  }
  return report.steady_throughput;
}

double CompareAnalytic(const SimReport& report, const Plan& plan) {
  const double analytic = 1.0 / plan.bottleneck_time;
  return std::abs(MeasureThroughput(report) - analytic) / analytic;
}

void WriteTraceCsv(const std::vector<TraceRecord>& trace, std::ostream& out) {
  out << "time_start,time_end,worker,minibatch,stage,direction,version_used\n";
  std::ostringstream line;
  line << std::setprecision(17);
  for (const TraceRecord& r : trace) {
    line.str("");
    line << r.time_start << ',' << r.time_end << ',' << r.worker << ','
         << r.minibatch << ',' << r.stage << ',' << DirectionName(r.direction)
         << ',' << r.version_used << '\n';
    out << line.str();
  }
}

nlohmann::json ReportToJson(const SimReport& report) {
  return {{"makespan", report.makespan},
          {"has_steady_window", report.has_steady_window},
          {"window_start", report.window_start},
          {"window_end", report.window_end},
          {"steady_throughput", report.steady_throughput},
          {"per_worker_utilization", report.per_worker_utilization},
          {"comm_bytes_total", report.comm_bytes_total},
          {"peak_versions_per_stage", report.peak_versions_per_stage},
          {"peak_inflight_per_stage", report.peak_inflight_per_stage}};
}

}  // namespace pipeplan
