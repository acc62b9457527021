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

#ifndef PIPEPLAN_PARTITIONER_H_
#define PIPEPLAN_PARTITIONER_H_

#include <cstdint>

#include "pipeplan/cost_model.h"
#include "pipeplan/plan.h"

namespace pipeplan {

// Absolute tolerance for comparing candidate bottleneck times.
inline constexpr double kTimeTolerance = 1e-12;

struct SolveOptions {
  // Use exactly hw.num_machines instead of at most that many.
  bool force_all_machines = false;
  // Upper bound on any stage's replication; 0 means unbounded. A value of 1
  // restricts the search to straight pipelines.
  int max_replication = 0;
};

struct SolveStats {
  // Number of candidate (split, replication) evaluations in the main
  // recurrence; bounded by N^2 * M^2.
  std::int64_t subproblem_evaluations = 0;
};

// Optimal contiguous partition of the layer chain into (possibly replicated)
// stages minimizing the slowest stage's time, where a stage costs
// StageTime(i, j, m) and a boundary after layer i costs 2 * C_i (activations
// forward, gradients backward).
//
// Among optimal plans (within kTimeTolerance) the result is the one with the
// fewest stages; remaining ties go to the smallest last split index, then the
// fewest machines, then the smallest last-stage replication, recursing toward
// the input stage. Throws ArgumentError when no plan satisfies the options.
Plan Solve(const CostContext& ctx, const SolveOptions& options = {},
           SolveStats* stats = nullptr);

// Exhaustive enumeration of every partition and replication assignment,
// with the same objective and tie-breaking as Solve. Limited to N <= 12 and
// M <= 8; throws ArgumentError beyond that.
Plan BruteForce(const CostContext& ctx, const SolveOptions& options = {});

// Bottleneck of an arbitrary plan under the same objective as Solve.
double EvaluatePlan(const CostContext& ctx, const Plan& plan);

// Plan with the given per-stage replications and layer boundaries
// (`last_layers[k]` is the final layer of stage k). Bottleneck and counts are
// filled in from `ctx`.
Plan MakePlan(const CostContext& ctx, const std::vector<int>& replications,
              const std::vector<int>& last_layers);

// One stage spanning every layer, replicated over `machines` workers.
Plan DataParallelPlan(const CostContext& ctx, int machines);

}  // namespace pipeplan

#endif  // PIPEPLAN_PARTITIONER_H_
