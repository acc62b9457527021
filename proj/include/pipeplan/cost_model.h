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

#ifndef PIPEPLAN_COST_MODEL_H_
#define PIPEPLAN_COST_MODEL_H_

#include <vector>

#include "pipeplan/plan.h"
#include "pipeplan/profile.h"

namespace pipeplan {

// Analytic time and volume model over an immutable (profile, hardware) pair.
//
// Communication time is bytes / bandwidth on a single link; the host/device
// copies on either side are folded into that one figure. Layer indices are
// 1-based throughout. Every query is a pure function of the context and is
// safe to call concurrently.
class CostContext {
 public:
  // Validates both inputs; throws ValidationError.
  CostContext(ModelProfile profile, HardwareSpec hw);

  const ModelProfile& profile() const { return profile_; }
  const HardwareSpec& hw() const { return hw_; }
  int num_layers() const { return profile_.num_layers(); }

  // Prefix sums with index 0 == 0; size num_layers() + 1.
  const std::vector<double>& prefix_compute() const { return prefix_compute_; }
  const std::vector<double>& prefix_fwd() const { return prefix_fwd_; }
  const std::vector<double>& prefix_bwd() const { return prefix_bwd_; }
  const std::vector<double>& prefix_param_bytes() const {
    return prefix_param_bytes_;
  }

  // Sum of fwd+bwd time over layers i..j.
  double ComputeTime(int i, int j) const;
  double ForwardTime(int i, int j) const;
  double BackwardTime(int i, int j) const;
  double ParamBytes(int i, int j) const;

  // Time to ship layer l's output activations to layer l+1 (one direction).
  // Requires 1 <= l <= N-1.
  double CommTimeActivations(int l) const;

  // Per-worker weight synchronization time for layers i..j replicated over m
  // workers: bytes_per_elem * (m-1)/m * sum(param_elems) / bandwidth.
  // Exactly zero for m == 1.
  double WeightSyncTime(int i, int j, int m) const;

  // (1/m) * max(sum of compute, sum of weight-sync) over layers i..j.
  double StageTime(int i, int j, int m) const;

  // Bytes crossing the network in one data-parallel step on m workers.
  double CommVolumeBsp(int m) const;
  // Same, restricted to layers i..j.
  double CommVolumeBsp(int i, int j, int m) const;

  // Per-minibatch traffic of a pipeline plan: activations forward plus
  // gradients backward at every stage boundary, plus data-parallel sync
  // volume of each replicated stage. Throws ArgumentError if the plan does
  // not cover this profile.
  double CommVolumePipeline(const Plan& plan) const;

 private:
  void CheckRange(int i, int j, int m) const;

  ModelProfile profile_;
  HardwareSpec hw_;
  std::vector<double> prefix_compute_;
  std::vector<double> prefix_fwd_;
  std::vector<double> prefix_bwd_;
  std::vector<double> prefix_param_bytes_;
};

}  // namespace pipeplan

#endif  // PIPEPLAN_COST_MODEL_H_
