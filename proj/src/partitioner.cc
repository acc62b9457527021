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

#include "pipeplan/partitioner.h"

#include <algorithm>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pipeplan/errors.h"

namespace pipeplan {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kNoStages = std::numeric_limits<int>::max();

int ReplicationCap(const SolveOptions& options, int machines) {
  return options.max_replication > 0 ? std::min(options.max_replication, machines)
                                     : machines;
}

// Row-major (layer, machines) table, both 1-based.
template <typename T>
class Table {
 public:
  Table(int rows, int cols, T init)
      : cols_(cols + 1), data_((rows + 1) * (cols + 1), init) {}
  T& at(int r, int c) { return data_[r * cols_ + c]; }
  const T& at(int r, int c) const { return data_[r * cols_ + c]; }

 private:
  int cols_;
  std::vector<T> data_;
};

double BoundaryTime(const CostContext& ctx, int i) {
  return 2.0 * ctx.CommTimeActivations(i);
}

// Lexicographic tie-break key shared by Solve and BruteForce:
// [stage count, last split, machines used, last replication,
//  previous split, previous replication, ...] with split 0 for "no split".
std::vector<int> TieKey(const Plan& plan) {
  const int k = plan.num_stages();
  std::vector<int> key{k};
  for (int t = k - 1; t >= 0; --t) {
    key.push_back(t > 0 ? plan.stages[t - 1].last_layer : 0);
    if (t == k - 1) key.push_back(plan.machines_used);
    key.push_back(plan.stages[t].replication);
  }
  return key;
}

}  // namespace

double EvaluatePlan(const CostContext& ctx, const Plan& plan) {
  double worst = 0.0;
  for (std::size_t k = 0; k < plan.stages.size(); ++k) {
    const Stage& s = plan.stages[k];
    worst = std::max(worst, ctx.StageTime(s.first_layer, s.last_layer, s.replication));
    if (k + 1 < plan.stages.size()) {
      worst = std::max(worst, BoundaryTime(ctx, s.last_layer));
    }
  }
  return worst;
}

Plan MakePlan(const CostContext& ctx, const std::vector<int>& replications,
              const std::vector<int>& last_layers) {
  if (replications.size() != last_layers.size() || replications.empty()) {
    throw ArgumentError("replications and layer boundaries differ in length");
  }
  Plan plan;
  int first = 1;
  for (std::size_t k = 0; k < replications.size(); ++k) {
    plan.stages.push_back({first, last_layers[k], replications[k]});
    first = last_layers[k] + 1;
  }
  FinalizeCounts(plan);
  try {
    ValidatePlan(plan, ctx.num_layers());
  } catch (const ValidationError& e) {
    throw ArgumentError(e.what());
  }
  plan.bottleneck_time = EvaluatePlan(ctx, plan);
  return plan;
}

Plan DataParallelPlan(const CostContext& ctx, int machines) {
  return MakePlan(ctx, {machines}, {ctx.num_layers()});
}

Plan Solve(const CostContext& ctx, const SolveOptions& options,
           SolveStats* stats) {
  const int n = ctx.num_layers();
  const int total_machines = ctx.hw().num_machines;
  const int cap = ReplicationCap(options, total_machines);
  std::int64_t evaluations = 0;

  // best.at(j, m): slowest-stage time of the optimal pipeline over layers
  // 1..j using exactly m machines.
  Table<double> best(n, total_machines, kInf);
  for (int j = 1; j <= n; ++j) {
    for (int m = 1; m <= total_machines; ++m) {
      double value = kInf;
      ++evaluations;
      if (m <= cap) value = ctx.StageTime(1, j, m);
      for (int i = 1; i < j; ++i) {
        const double boundary = BoundaryTime(ctx, i);
        for (int mp = 1; mp < m && mp <= cap; ++mp) {
          ++evaluations;
          const double prefix = best.at(i, m - mp);
          if (prefix == kInf) continue;
          const double candidate =
              std::max({prefix, boundary, ctx.StageTime(i + 1, j, mp)});
          value = std::min(value, candidate);
        }
      }
      best.at(j, m) = value;
    }
  }
  if (stats != nullptr) stats->subproblem_evaluations = evaluations;

  const int m_lo = options.force_all_machines ? total_machines : 1;
  double optimum = kInf;
  for (int m = m_lo; m <= total_machines; ++m) {
    optimum = std::min(optimum, best.at(n, m));
  }
  if (optimum == kInf) {
    throw ArgumentError("no plan satisfies the replication/machine constraints");
  }

  // Second pass: fewest stages among plans within tolerance of the optimum.
  const double threshold = optimum + kTimeTolerance;
  auto stage_ok = [&](int i, int j, int m) {
    return m <= cap && ctx.StageTime(i, j, m) <= threshold;
  };
  auto boundary_ok = [&](int i) { return BoundaryTime(ctx, i) <= threshold; };

  Table<int> fewest(n, total_machines, kNoStages);
  for (int j = 1; j <= n; ++j) {
    for (int m = 1; m <= total_machines; ++m) {
      if (stage_ok(1, j, m)) {
        fewest.at(j, m) = 1;
        continue;
      }
      int count = kNoStages;
      for (int i = 1; i < j; ++i) {
        if (!boundary_ok(i)) continue;
        for (int mp = 1; mp < m && mp <= cap; ++mp) {
          const int prefix = fewest.at(i, m - mp);
          if (prefix == kNoStages || !stage_ok(i + 1, j, mp)) continue;
          count = std::min(count, prefix + 1);
        }
      }
      fewest.at(j, m) = count;
    }
  }

  int stages_needed = kNoStages;
  for (int m = m_lo; m <= total_machines; ++m) {
    stages_needed = std::min(stages_needed, fewest.at(n, m));
  }

  // The split before the last stage and its replication for (j, m) with
  // exactly `k` stages, picking the smallest split index then the smallest
  // replication. For k == 1 the split is 0.
  struct Step {
    int split;
    int replication;
  };
  auto choose = [&](int j, int m, int k) -> std::optional<Step> {
    if (fewest.at(j, m) != k) return std::nullopt;
    if (k == 1) return Step{0, m};
    for (int i = 1; i < j; ++i) {
      if (!boundary_ok(i)) continue;
      for (int mp = 1; mp < m && mp <= cap; ++mp) {
        if (fewest.at(i, m - mp) == k - 1 && stage_ok(i + 1, j, mp)) {
          return Step{i, mp};
        }
      }
    }
    return std::nullopt;
  };

  // Top level: smallest last split first, then fewest machines.
  int machines = 0;
  std::optional<Step> top;
  for (int m = m_lo; m <= total_machines; ++m) {
    const std::optional<Step> step = choose(n, m, stages_needed);
    if (!step) continue;
    if (!top || step->split < top->split) {
      top = step;
      machines = m;
    }
  }

  std::vector<Stage> reversed;
  int j = n;
  int m = machines;
  int k = stages_needed;
  std::optional<Step> step = top;
  while (true) {
    reversed.push_back({step->split + 1, j, step->replication});
    if (k == 1) break;
    j = step->split;
    m -= step->replication;
    --k;
    step = choose(j, m, k);
  }

  Plan plan;
  plan.stages.assign(reversed.rbegin(), reversed.rend());
  FinalizeCounts(plan);
  plan.bottleneck_time = EvaluatePlan(ctx, plan);
  return plan;
}

Plan BruteForce(const CostContext& ctx, const SolveOptions& options) {
  const int n = ctx.num_layers();
  const int total_machines = ctx.hw().num_machines;
  if (n > 12 || total_machines > 8) {
    throw ArgumentError("brute force is limited to N <= 12 and M <= 8");
  }
  const int cap = ReplicationCap(options, total_machines);

  std::vector<Plan> candidates;
  // Every composition of n layers (bit b set => split after layer b+1).
  for (unsigned mask = 0; mask < (1u << (n - 1)); ++mask) {
    std::vector<int> last_layers;
    for (int b = 0; b < n - 1; ++b) {
      if (mask & (1u << b)) last_layers.push_back(b + 1);
    }
    last_layers.push_back(n);
    const int k = static_cast<int>(last_layers.size());
    if (k > total_machines) continue;

    // Every replication vector with entries in [1, cap] and sum <= M.
    std::vector<int> reps(k, 1);
    while (true) {
      int sum = 0;
      for (int r : reps) sum += r;
      const bool sum_ok = options.force_all_machines ? sum == total_machines
                                                     : sum <= total_machines;
      if (sum_ok) candidates.push_back(MakePlan(ctx, reps, last_layers));
      int pos = 0;
      while (pos < k) {
        if (reps[pos] < cap && sum < total_machines) {
          ++reps[pos];
          break;
        }
        sum -= reps[pos] - 1;
        reps[pos] = 1;
        ++pos;
      }
      if (pos == k) break;
    }
  }
  if (candidates.empty()) {
    throw ArgumentError("no plan satisfies the replication/machine constraints");
  }

  double optimum = kInf;
  for (const Plan& p : candidates) optimum = std::min(optimum, p.bottleneck_time);
  const Plan* chosen = nullptr;
  std::vector<int> chosen_key;
  for (const Plan& p : candidates) {
    if (p.bottleneck_time > optimum + kTimeTolerance) continue;
    std::vector<int> key = TieKey(p);
    if (chosen == nullptr || key < chosen_key) {
      chosen = &p;
      chosen_key = std::move(key);
    }
  }
  return *chosen;
}

}  // namespace pipeplan
