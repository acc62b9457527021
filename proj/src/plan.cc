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

#include "pipeplan/plan.h"

#include <charconv>

#include "pipeplan/errors.h"

namespace pipeplan {

using nlohmann::json;

bool Plan::is_straight() const {
  for (const Stage& s : stages) {
    if (s.replication != 1) return false;
  }
  return true;
}

int Noam(const Plan& plan) {
  if (plan.stages.empty()) throw ArgumentError("plan has no stages");
  int total = 0;
  for (const Stage& s : plan.stages) total += s.replication;
  const int input = plan.stages.front().replication;
  if (input < 1) throw ArgumentError("input stage replication must be >= 1");
  return (total + input - 1) / input;
}

void FinalizeCounts(Plan& plan) {
  int total = 0;
  for (const Stage& s : plan.stages) total += s.replication;
  plan.machines_used = total;
  plan.noam = Noam(plan);
}

void ValidatePlan(const Plan& plan, int n_layers) {
  if (plan.stages.empty()) throw ValidationError("plan has no stages");
  int expected_first = 1;
  int total = 0;
  for (std::size_t k = 0; k < plan.stages.size(); ++k) {
    const Stage& s = plan.stages[k];
    const std::string tag = "stage " + std::to_string(k);
    if (s.first_layer != expected_first) {
      throw ValidationError(tag + ": starts at layer " +
                            std::to_string(s.first_layer) + ", expected " +
                            std::to_string(expected_first));
    }
    if (s.last_layer < s.first_layer) {
      throw ValidationError(tag + ": last_layer precedes first_layer");
    }
    if (s.replication < 1) throw ValidationError(tag + ": replication < 1");
    expected_first = s.last_layer + 1;
    total += s.replication;
  }
  if (expected_first != n_layers + 1) {
    throw ValidationError("plan covers layers 1.." +
                          std::to_string(expected_first - 1) + " but profile has " +
                          std::to_string(n_layers));
  }
  if (total != plan.machines_used) {
    throw ValidationError("machines_used does not match replication total");
  }
  if (plan.noam != Noam(plan)) throw ValidationError("noam is inconsistent");
}

std::string ConfigString(const Plan& plan) {
  std::string out;
  for (const Stage& s : plan.stages) {
    if (!out.empty()) out += '-';
    out += std::to_string(s.replication);
  }
  return out;
}

std::vector<int> ParseConfig(std::string_view text) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t dash = text.find('-', pos);
    const std::string_view part =
        text.substr(pos, dash == std::string_view::npos ? text.npos : dash - pos);
    int value = 0;
    const auto [ptr, ec] =
        std::from_chars(part.data(), part.data() + part.size(), value);
    if (part.empty() || ec != std::errc() || ptr != part.data() + part.size()) {
      throw FormatError("malformed config '" + std::string(text) + "'");
    }
    if (value < 1) {
      throw FormatError("config '" + std::string(text) +
                        "' has a nonpositive replication");
    }
    out.push_back(value);
    if (dash == std::string_view::npos) break;
    pos = dash + 1;
  }
  return out;
}

json PlanToJson(const Plan& plan) {
  json stages = json::array();
  for (const Stage& s : plan.stages) {
    stages.push_back({{"first_layer", s.first_layer},
                      {"last_layer", s.last_layer},
                      {"replication", s.replication}});
  }
  return {{"stages", stages},
          {"bottleneck_time", plan.bottleneck_time},
          {"noam", plan.noam},
          {"machines_used", plan.machines_used},
          {"config", ConfigString(plan)}};
}

Plan PlanFromJson(const json& doc) {
  try {
    Plan plan;
    for (const json& s : doc.at("stages")) {
      plan.stages.push_back({s.at("first_layer").get<int>(),
                             s.at("last_layer").get<int>(),
                             s.at("replication").get<int>()});
    }
    plan.bottleneck_time = doc.at("bottleneck_time").get<double>();
    plan.noam = doc.at("noam").get<int>();
    plan.machines_used = doc.at("machines_used").get<int>();
    return plan;
  } catch (const json::exception& e) {
    throw FormatError(std::string("plan: ") + e.what());
  }
}

}  // namespace pipeplan
