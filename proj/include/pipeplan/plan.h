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

#ifndef PIPEPLAN_PLAN_H_
#define PIPEPLAN_PLAN_H_

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace pipeplan {

// A contiguous run of layers [first_layer, last_layer] (1-based, inclusive)
// served by `replication` data-parallel workers.
struct Stage {
  int first_layer = 1;
  int last_layer = 1;
  int replication = 1;

  int num_layers() const { return last_layer - first_layer + 1; }
  bool operator==(const Stage&) const = default;
};

struct Plan {
  std::vector<Stage> stages;
  double bottleneck_time = 0.0;
  int noam = 1;
  int machines_used = 1;

  int num_stages() const { return static_cast<int>(stages.size()); }
  bool is_straight() const;
  bool operator==(const Plan&) const = default;
};

// ceil(total replication / input-stage replication), read from the stages.
int Noam(const Plan& plan);

// Sums the replications and fills in machines_used and noam.
void FinalizeCounts(Plan& plan);

// Checks contiguous coverage of 1..n_layers, positive replications, the
// machine total, and the NOAM formula. Throws ValidationError.
void ValidatePlan(const Plan& plan, int n_layers);

// "7-1" style replication string.
std::string ConfigString(const Plan& plan);

// Parses a dash-separated list of positive replications ("2-1-1"). This only
// fixes the stage count and replications; layer ranges come from elsewhere.
// Throws FormatError on malformed or nonpositive entries.
std::vector<int> ParseConfig(std::string_view text);

nlohmann::json PlanToJson(const Plan& plan);
// Throws FormatError for missing fields; invariants are checked separately by
// ValidatePlan once the layer count is known.
Plan PlanFromJson(const nlohmann::json& doc);

}  // namespace pipeplan

#endif  // PIPEPLAN_PLAN_H_
