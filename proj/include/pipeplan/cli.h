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

#ifndef PIPEPLAN_CLI_H_
#define PIPEPLAN_CLI_H_

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "pipeplan/cost_model.h"
#include "pipeplan/plan.h"

namespace pipeplan {

inline constexpr char kToolVersion[] = "0.1.0";

// Exit codes shared by every subcommand.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitValidation = 2,
  kExitSimulation = 3,
};

// Embedded in every JSON artifact the CLI writes. Carries no timestamp, so
// reruns with identical inputs produce byte-identical files.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> inputs;
  std::string tool_version = kToolVersion;
  std::uint64_t seed = 0;
};

nlohmann::json ManifestToJson(const RunManifest& manifest);

struct RegimeResult {
  std::string name;
  std::string config;
  double throughput = 0.0;  // simulated steady minibatches/s
  double speedup = 0.0;     // over one machine
};

// Simulated throughput of one-machine training and of four execution
// regimes on ctx.hw().num_machines: model parallelism (straight partition, one
// minibatch in flight), straight pipeline (same partition, NOAM in flight),
// the full planner output, and pure data parallelism.
std::vector<RegimeResult> CompareRegimes(const CostContext& ctx,
                                         std::int64_t num_minibatches);

// Entry point behind the `pipeplan` binary. `args` excludes the program name.
int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err);

}  // namespace pipeplan

#endif  // PIPEPLAN_CLI_H_
