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

#ifndef PIPEPLAN_PROFILE_H_
#define PIPEPLAN_PROFILE_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace pipeplan {

// Measured quantities for one layer of the chain. Times are seconds for one
// minibatch; sizes are element counts (converted to bytes via
// HardwareSpec::bytes_per_elem).
struct LayerProfile {
  int layer_id = 0;  // 1-based position in the chain
  std::string name;
  double fwd_time = 0.0;
  double bwd_time = 0.0;
  std::int64_t activation_elems = 0;
  std::int64_t param_elems = 0;

  // Total compute time across forward and backward pass.
  double total_time() const { return fwd_time + bwd_time; }

  bool operator==(const LayerProfile&) const = default;
};

struct ModelProfile {
  std::vector<LayerProfile> layers;
  std::int64_t minibatch_size = 1;

  int num_layers() const { return static_cast<int>(layers.size()); }
  // `l` is 1-based.
  const LayerProfile& layer(int l) const { return layers.at(l - 1); }

  bool operator==(const ModelProfile&) const = default;
};

struct HardwareSpec {
  int num_machines = 1;
  double bandwidth = 1.0;  // bytes per second
  double bytes_per_elem = 4.0;
};

// Throws ValidationError naming the offending layer.
void Validate(const ModelProfile& profile);
void Validate(const HardwareSpec& hw);

// Builds a ModelProfile from its JSON document. Layer ids are assigned from
// list position. Throws FormatError on missing/mistyped fields and
// ValidationError on invariant violations.
ModelProfile ProfileFromJson(const nlohmann::json& doc);
nlohmann::json ProfileToJson(const ModelProfile& profile);

ModelProfile LoadProfile(const std::filesystem::path& path);
void SaveProfile(const ModelProfile& profile, const std::filesystem::path& path);

enum class SynthKind { kUniform, kVggLike, kInceptionLike };

SynthKind ParseSynthKind(std::string_view text);
std::string_view SynthKindName(SynthKind kind);

// Deterministic synthetic profiles.
//
//  kUniform:       every layer identical; `seed` is ignored.
//  kVggLike:       convolution-style head with large, shrinking activations
//                  and few parameters, followed by ceil(n/4) dense layers that
//                  hold >= 90% of all parameters.
//  kInceptionLike: compute-heavy layers with a small, evenly spread parameter
//                  footprint, so weight synchronization stays well below
//                  compute at 8 machines on a >= 1 GB/s link.
//
// Throws ArgumentError when n_layers < 2.
ModelProfile SynthProfile(SynthKind kind, int n_layers, std::uint64_t seed);

}  // namespace pipeplan

#endif  // PIPEPLAN_PROFILE_H_
