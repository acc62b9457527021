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

#include "pipeplan/semantics.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>
#include <string>

#include "pipeplan/errors.h"
#include "rng_util.h"

namespace pipeplan {

ToyModel::ToyModel(std::vector<int> stage_dims, int rows_per_minibatch,
                   int num_blocks, double learning_rate, std::uint64_t seed)
    : stage_dims_(std::move(stage_dims)),
      rows_(rows_per_minibatch),
      num_blocks_(num_blocks),
      learning_rate_(learning_rate) {
  if (stage_dims_.empty()) throw ArgumentError("toy model needs >= 1 stage");
  for (int d : stage_dims_) {
    if (d < 1) throw ArgumentError("stage dimension must be >= 1");
    offsets_.push_back(dim_);
    dim_ += d;
  }
  if (rows_ < 1 || num_blocks_ < 1) {
    throw ArgumentError("toy model needs >= 1 row and >= 1 block");
  }
  if (learning_rate_ < 0.0) throw ArgumentError("learning rate must be >= 0");

  std::mt19937_64 gen(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim_));
  Vector truth(dim_);
  for (double& v : truth) v = internal::Uniform(gen, -1.0, 1.0);
  const int total_rows = rows_ * num_blocks_;
  x_.resize(static_cast<std::size_t>(total_rows) * dim_);
  y_.resize(total_rows);
  for (int r = 0; r < total_rows; ++r) {
    double dot = 0.0;
    for (int c = 0; c < dim_; ++c) {
      const double v = scale * internal::Uniform(gen, -1.0, 1.0);
      x_[static_cast<std::size_t>(r) * dim_ + c] = v;
      dot += v * truth[c];
    }
    y_[r] = dot + 0.1 * internal::Uniform(gen, -1.0, 1.0);
  }
  initial_.resize(dim_);
  for (double& v : initial_) v = internal::Uniform(gen, -1.0, 1.0);
}

double ToyModel::Loss(std::int64_t minibatch, std::span<const double> w) const {
  const int block = static_cast<int>((minibatch - 1) % num_blocks_);
  double loss = 0.0;
  for (int r = block * rows_; r < (block + 1) * rows_; ++r) {
    double residual = -y_[r];
    for (int c = 0; c < dim_; ++c) {
      residual += x_[static_cast<std::size_t>(r) * dim_ + c] * w[c];
    }
    loss += 0.5 * residual * residual;
  }
  return loss;
}

Vector ToyModel::Gradient(std::int64_t minibatch, std::span<const double> w) const {
  if (static_cast<int>(w.size()) != dim_) {
    throw ArgumentError("weight vector has the wrong dimension");
  }
  const int block = static_cast<int>((minibatch - 1) % num_blocks_);
  Vector grad(dim_, 0.0);
  for (int r = block * rows_; r < (block + 1) * rows_; ++r) {
    const double* row = &x_[static_cast<std::size_t>(r) * dim_];
    double residual = -y_[r];
    for (int c = 0; c < dim_; ++c) residual += row[c] * w[c];
    for (int c = 0; c < dim_; ++c) grad[c] += row[c] * residual;
  }
  return grad;
}

Trajectory Replay(const VersionLedger& ledger, const ToyModel& model,
                  std::int64_t steps) {
  const int n = model.num_stages();
  if (!ledger.straight()) {
    throw ArgumentError("replay needs a ledger from a straight pipeline");
  }
  if (ledger.num_stages() != n) {
    throw ArgumentError("ledger and toy model disagree on the stage count");
  }
  if (steps > ledger.num_minibatches()) {
    throw ArgumentError("ledger covers fewer minibatches than requested");
  }

  // archive[s][v]: stage s's block after updates from minibatches 1..v.
  std::vector<std::vector<Vector>> archive(n);
  for (int s = 0; s < n; ++s) {
    const auto begin = model.initial_weights().begin() + model.offset(s);
    archive[s].emplace_back(begin, begin + model.stage_dim(s));
  }
  auto lookup = [&](int s, std::int64_t m, Direction dir) -> const Vector& {
    const std::int64_t v = ledger.Get(s, m, dir);
    if (v < 0 || v >= static_cast<std::int64_t>(archive[s].size())) {
      throw ConsistencyError("minibatch " + std::to_string(m) + " reads version " +
                             std::to_string(v) + " at stage " + std::to_string(s) +
                             ", which has not been committed");
    }
    return archive[s][v];
  };

  Trajectory out;
  out.push_back(model.initial_weights());
  Vector point(model.dim());
  for (std::int64_t m = 1; m <= steps; ++m) {
    std::vector<Vector> next(n);
    for (int s = 0; s < n; ++s) {
      for (int k = 0; k < n; ++k) {
        const Vector& block =
            lookup(k, m, k == s ? Direction::kBackward : Direction::kForward);
        std::copy(block.begin(), block.end(), point.begin() + model.offset(k));
      }
      const Vector grad = model.Gradient(m, point);
      const Vector& current = archive[s].back();
      next[s].resize(current.size());
      for (std::size_t c = 0; c < current.size(); ++c) {
        next[s][c] = current[c] - model.learning_rate() * grad[model.offset(s) + c];
      }
    }
    Vector full(model.dim());
    for (int s = 0; s < n; ++s) {
      std::copy(next[s].begin(), next[s].end(), full.begin() + model.offset(s));
      archive[s].push_back(std::move(next[s]));
    }
    out.push_back(std::move(full));
  }
  return out;
}

Trajectory EquationOracle(UpdateRule rule, int n, const ToyModel& model,
                          std::int64_t steps) {
  if (n != model.num_stages()) {
    throw ArgumentError("stage count differs from the toy model");
  }
  if (steps < n) throw ArgumentError("need at least n steps");
  Trajectory w{model.initial_weights()};
  Vector point(model.dim());
  for (std::int64_t t = 0; t < steps; ++t) {
    for (int i = 1; i <= n; ++i) {
      std::int64_t delayed = t;
      if (rule == UpdateRule::kWeightStashing) delayed = t - n + i;
      if (rule == UpdateRule::kVerticalSync) delayed = t - n + 1;
      delayed = std::max<std::int64_t>(0, delayed);
      const int lo = model.offset(i - 1);
      const int hi = lo + model.stage_dim(i - 1);
      std::copy(w[delayed].begin() + lo, w[delayed].begin() + hi, point.begin() + lo);
    }
    const Vector grad = model.Gradient(t + 1, point);
    Vector next = w[t];
    for (int c = 0; c < model.dim(); ++c) next[c] -= model.learning_rate() * grad[c];
    w.push_back(std::move(next));
  }
  return w;
}

double MaxAbsDifference(const Trajectory& a, const Trajectory& b) {
  if (a.size() != b.size()) throw ArgumentError("trajectory lengths differ");
  double worst = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    if (a[t].size() != b[t].size()) throw ArgumentError("weight sizes differ");
    for (std::size_t c = 0; c < a[t].size(); ++c) {
      worst = std::max(worst, std::abs(a[t][c] - b[t][c]));
    }
  }
  return worst;
}

void WriteTrajectoryCsv(const Trajectory& trajectory, std::ostream& out) {
  out << "step";
  const std::size_t dim = trajectory.empty() ? 0 : trajectory.front().size();
  for (std::size_t c = 0; c < dim; ++c) out << ",w" << c;
  out << '\n' << std::setprecision(17);
  for (std::size_t t = 0; t < trajectory.size(); ++t) {
    out << t;
    for (double v : trajectory[t]) out << ',' << v;
    out << '\n';
  }
}

}  // namespace pipeplan
