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

#ifndef PIPEPLAN_SEMANTICS_H_
#define PIPEPLAN_SEMANTICS_H_

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "pipeplan/simulator.h"

namespace pipeplan {

using Vector = std::vector<double>;

// Linear least-squares model whose parameters are split into per-stage
// blocks. Minibatch t uses row block (t - 1) mod num_blocks of a fixed,
// seeded design matrix; its loss is 1/2 * ||X_t w - y_t||^2 with the exact
// gradient X_t^T (X_t w - y_t).
class ToyModel {
 public:
  ToyModel(std::vector<int> stage_dims, int rows_per_minibatch, int num_blocks,
           double learning_rate, std::uint64_t seed);

  int num_stages() const { return static_cast<int>(stage_dims_.size()); }
  int dim() const { return dim_; }
  double learning_rate() const { return learning_rate_; }
  // Column offset of stage s's block in the concatenated parameter vector.
  int offset(int stage) const { return offsets_.at(stage); }
  int stage_dim(int stage) const { return stage_dims_.at(stage); }
  const Vector& initial_weights() const { return initial_; }

  double Loss(std::int64_t minibatch, std::span<const double> w) const;
  Vector Gradient(std::int64_t minibatch, std::span<const double> w) const;

 private:
  std::vector<int> stage_dims_;
  std::vector<int> offsets_;
  int dim_ = 0;
  int rows_ = 0;
  int num_blocks_ = 0;
  double learning_rate_ = 0.0;
  Vector x_;  // row-major, (num_blocks * rows) x dim
  Vector y_;
  Vector initial_;
};

// w^(0), w^(1), ... as full concatenated vectors.
using Trajectory = std::vector<Vector>;

// Replays a straight-pipeline ledger on the toy model. For minibatch m, stage
// s's block gradient is the partial derivative taken at the point where
// every other stage holds its forward-pass version and stage s holds its
// backward-pass version; stage s then commits w_s^(m). Throws
// ConsistencyError if the ledger reads a version not yet produced and
// ArgumentError on shape mismatches.
Trajectory Replay(const VersionLedger& ledger, const ToyModel& model,
                  std::int64_t steps);

enum class UpdateRule { kVanilla, kWeightStashing, kVerticalSync };

// Iterates w^(t+1) = w^(t) - lr * grad f_{t+1}(w_1^(d_1), ..., w_n^(d_n)) with
//  kVanilla:        d_i = t
//  kWeightStashing: d_i = t - n + i
//  kVerticalSync:   d_i = t - n + 1
// and negative indices clamped to 0. Requires steps >= n.
Trajectory EquationOracle(UpdateRule rule, int n, const ToyModel& model,
                          std::int64_t steps);

// Largest elementwise |a - b| over two trajectories of equal shape.
double MaxAbsDifference(const Trajectory& a, const Trajectory& b);

// CSV with header step,w0,w1,...
void WriteTrajectoryCsv(const Trajectory& trajectory, std::ostream& out);

}  // namespace pipeplan

#endif  // PIPEPLAN_SEMANTICS_H_
