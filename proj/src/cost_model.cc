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

#include "pipeplan/cost_model.h"

#include <algorithm>
#include <string>

#include "pipeplan/errors.h"

namespace pipeplan {

CostContext::CostContext(ModelProfile profile, HardwareSpec hw)
    : profile_(std::move(profile)), hw_(hw) {
  Validate(profile_);
  Validate(hw_);
  const int n = profile_.num_layers();
  prefix_compute_.assign(n + 1, 0.0);
  prefix_fwd_.assign(n + 1, 0.0);
  prefix_bwd_.assign(n + 1, 0.0);
  prefix_param_bytes_.assign(n + 1, 0.0);
  for (int l = 1; l <= n; ++l) {
    const LayerProfile& layer = profile_.layer(l);
    prefix_compute_[l] = prefix_compute_[l - 1] + layer.total_time();
    prefix_fwd_[l] = prefix_fwd_[l - 1] + layer.fwd_time;
    prefix_bwd_[l] = prefix_bwd_[l - 1] + layer.bwd_time;
    prefix_param_bytes_[l] =
        prefix_param_bytes_[l - 1] +
        static_cast<double>(layer.param_elems) * hw_.bytes_per_elem;
  }
}

void CostContext::CheckRange(int i, int j, int m) const {
  if (i < 1 || j > num_layers() || i > j) {
    throw ArgumentError("layer range " + std::to_string(i) + ".." +
                        std::to_string(j) + " outside 1.." +
                        std::to_string(num_layers()));
  }
  if (m < 1) throw ArgumentError("replication must be >= 1");
}

double CostContext::ComputeTime(int i, int j) const {
  CheckRange(i, j, 1);
  return prefix_compute_[j] - prefix_compute_[i - 1];
}

double CostContext::ForwardTime(int i, int j) const {
  CheckRange(i, j, 1);
  return prefix_fwd_[j] - prefix_fwd_[i - 1];
}

double CostContext::BackwardTime(int i, int j) const {
  CheckRange(i, j, 1);
  return prefix_bwd_[j] - prefix_bwd_[i - 1];
}

double CostContext::ParamBytes(int i, int j) const {
  CheckRange(i, j, 1);
  return prefix_param_bytes_[j] - prefix_param_bytes_[i - 1];
}

double CostContext::CommTimeActivations(int l) const {
  if (l < 1 || l > num_layers() - 1) {
    throw ArgumentError("activation boundary " + std::to_string(l) +
                        " outside 1.." + std::to_string(num_layers() - 1));
  }
  return static_cast<double>(profile_.layer(l).activation_elems) *
         hw_.bytes_per_elem / hw_.bandwidth;
}

double CostContext::WeightSyncTime(int i, int j, int m) const {
  CheckRange(i, j, m);
  if (m == 1) return 0.0;
  const double fraction = static_cast<double>(m - 1) / m;
  return fraction * ParamBytes(i, j) / hw_.bandwidth;
}

double CostContext::StageTime(int i, int j, int m) const {
  CheckRange(i, j, m);
  return std::max(ComputeTime(i, j), WeightSyncTime(i, j, m)) / m;
}

double CostContext::CommVolumeBsp(int m) const {
  return CommVolumeBsp(1, num_layers(), m);
}

double CostContext::CommVolumeBsp(int i, int j, int m) const {
  CheckRange(i, j, m);
  if (m == 1) return 0.0;
  const double per_worker = static_cast<double>(m - 1) / m * ParamBytes(i, j);
  return m * per_worker;
}

double CostContext::CommVolumePipeline(const Plan& plan) const {
  try {
    ValidatePlan(plan, num_layers());
  } catch (const ValidationError& e) {
    throw ArgumentError(std::string("plan does not match profile: ") + e.what());
  }
  double total = 0.0;
  for (std::size_t k = 0; k < plan.stages.size(); ++k) {
    const Stage& s = plan.stages[k];
    if (k + 1 < plan.stages.size()) {
      total += 2.0 * static_cast<double>(profile_.layer(s.last_layer).activation_elems) *
               hw_.bytes_per_elem;
    }
    if (s.replication > 1) {
      total += CommVolumeBsp(s.first_layer, s.last_layer, s.replication);
    }
  }
  return total;
}

}  // namespace pipeplan
