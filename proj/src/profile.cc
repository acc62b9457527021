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

#include "pipeplan/profile.h"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "pipeplan/errors.h"
#include "rng_util.h"

namespace pipeplan {

using nlohmann::json;

namespace {

std::string LayerTag(int index, const std::string& name) {
  std::ostringstream os;
  os << "layer " << index;
  if (!name.empty()) os << " (" << name << ")";
  return os.str();
}

const json& RequireField(const json& obj, const char* key,
                         const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw FormatError(where + ": missing field '" + key + "'");
  }
  return *it;
}

double ReadNumber(const json& obj, const char* key, const std::string& where) {
  const json& v = RequireField(obj, key, where);
  if (!v.is_number()) {
    throw FormatError(where + "." + key + ": expected a number, got " +
                      std::string(v.type_name()));
  }
  return v.get<double>();
}

std::int64_t ReadCount(const json& obj, const char* key,
                       const std::string& where) {
  const json& v = RequireField(obj, key, where);
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isfinite(d) && std::floor(d) == d) {
      return static_cast<std::int64_t>(d);
    }
  }
  throw FormatError(where + "." + key + ": expected an integer element count");
}

}  // namespace

void Validate(const ModelProfile& profile) {
  if (profile.layers.empty()) {
    throw ValidationError("profile has no layers");
  }
  if (profile.minibatch_size < 1) {
    throw ValidationError("minibatch_size must be >= 1");
  }
  for (std::size_t k = 0; k < profile.layers.size(); ++k) {
    const LayerProfile& l = profile.layers[k];
    const std::string tag = LayerTag(static_cast<int>(k) + 1, l.name);
    if (l.layer_id != static_cast<int>(k) + 1) {
      throw ValidationError(tag + ": layer_id " + std::to_string(l.layer_id) +
                            " out of sequence");
    }
    if (!std::isfinite(l.fwd_time) || !std::isfinite(l.bwd_time)) {
      throw ValidationError(tag + ": times must be finite");
    }
    if (l.fwd_time < 0.0) throw ValidationError(tag + ": negative fwd_time");
    if (l.bwd_time < 0.0) throw ValidationError(tag + ": negative bwd_time");
    if (l.total_time() <= 0.0) {
      throw ValidationError(tag + ": fwd_time + bwd_time must be positive");
    }
    if (l.activation_elems < 0) {
      throw ValidationError(tag + ": negative activation_elems");
    }
    if (l.param_elems < 0) throw ValidationError(tag + ": negative param_elems");
  }
}

void Validate(const HardwareSpec& hw) {
  if (hw.num_machines < 1) throw ValidationError("num_machines must be >= 1");
  if (!(hw.bandwidth > 0.0) || !std::isfinite(hw.bandwidth)) {
    throw ValidationError("bandwidth must be positive and finite");
  }
  if (!(hw.bytes_per_elem > 0.0) || !std::isfinite(hw.bytes_per_elem)) {
    throw ValidationError("bytes_per_elem must be positive and finite");
  }
}

ModelProfile ProfileFromJson(const json& doc) {
  if (!doc.is_object()) throw FormatError("profile: expected a JSON object");
  ModelProfile profile;
  profile.minibatch_size = ReadCount(doc, "minibatch_size", "profile");
  const json& layers = RequireField(doc, "layers", "profile");
  if (!layers.is_array()) throw FormatError("profile.layers: expected an array");
  int index = 0;
  for (const json& entry : layers) {
    ++index;
    const std::string where = "layers[" + std::to_string(index - 1) + "]";
    if (!entry.is_object()) throw FormatError(where + ": expected an object");
    LayerProfile l;
    l.layer_id = index;
    const json& name = RequireField(entry, "name", where);
    if (!name.is_string()) throw FormatError(where + ".name: expected a string");
    l.name = name.get<std::string>();
    l.fwd_time = ReadNumber(entry, "fwd_time", where);
    l.bwd_time = ReadNumber(entry, "bwd_time", where);
    l.activation_elems = ReadCount(entry, "activation_elems", where);
    l.param_elems = ReadCount(entry, "param_elems", where);
    profile.layers.push_back(std::move(l));
  }
  Validate(profile);
  return profile;
}

json ProfileToJson(const ModelProfile& profile) {
  json layers = json::array();
  for (const LayerProfile& l : profile.layers) {
    layers.push_back({{"name", l.name},
                      {"fwd_time", l.fwd_time},
                      {"bwd_time", l.bwd_time},
                      {"activation_elems", l.activation_elems},
                      {"param_elems", l.param_elems}});
  }
  return {{"minibatch_size", profile.minibatch_size}, {"layers", layers}};
}

ModelProfile LoadProfile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open profile file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return ProfileFromJson(doc);
}

void SaveProfile(const ModelProfile& profile, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write profile file " + path.string());
  out << ProfileToJson(profile).dump(2) << "\n";
}

SynthKind ParseSynthKind(std::string_view text) {
  if (text == "uniform") return SynthKind::kUniform;
  if (text == "vgg_like") return SynthKind::kVggLike;
  if (text == "inception_like") return SynthKind::kInceptionLike;
  throw ArgumentError("unknown profile kind '" + std::string(text) + "'");
}

std::string_view SynthKindName(SynthKind kind) {
  switch (kind) {
    case SynthKind::kUniform:
      return "uniform";
    case SynthKind::kVggLike:
      return "vgg_like";
    case SynthKind::kInceptionLike:
      return "inception_like";
  }
  return "unknown";
}

namespace {

using internal::Uniform;

std::int64_t Round(double x) { return static_cast<std::int64_t>(std::llround(x)); }

ModelProfile UniformProfile(int n) {
  ModelProfile p;
  p.minibatch_size = 32;
  for (int k = 1; k <= n; ++k) {
    p.layers.push_back({k, "layer" + std::to_string(k), 1.0e-2, 2.0e-2, 100000,
                        100000});
  }
  return p;
}

ModelProfile VggLike(int n, std::mt19937_64& gen) {
  const int dense = (n + 3) / 4;
  const int conv = n - dense;
  ModelProfile p;
  p.minibatch_size = 32;

  double activation = 4.0e5;
  std::int64_t conv_params = 0;
  for (int k = 0; k < conv; ++k) {
    LayerProfile l;
    l.layer_id = k + 1;
    l.name = "conv" + std::to_string(k + 1);
    l.fwd_time = 5.0e-3 * Uniform(gen, 0.8, 1.2);
    l.bwd_time = l.fwd_time * Uniform(gen, 1.8, 2.2);
    l.activation_elems = Round(activation);
    l.param_elems = Round(2.0e5 * (k + 1) * Uniform(gen, 0.9, 1.1));
    conv_params += l.param_elems;
    activation *= 0.7;
    p.layers.push_back(std::move(l));
  }

  // Dense tail holds 12x the head's parameters (~92% of the total), split
  // geometrically so the first dense layer dominates, as fc6 does in VGG16.
  std::vector<double> share(dense);
  double share_sum = 0.0;
  for (int d = 0; d < dense; ++d) {
    share[d] = std::pow(0.2, d);
    share_sum += share[d];
  }
  const double dense_params = 12.0 * static_cast<double>(conv_params);
  for (int d = 0; d < dense; ++d) {
    activation *= 0.5;
    LayerProfile l;
    l.layer_id = conv + d + 1;
    l.name = "fc" + std::to_string(d + 1);
    l.fwd_time = 1.5e-3 * Uniform(gen, 0.8, 1.2);
    l.bwd_time = 2.0 * l.fwd_time * Uniform(gen, 0.9, 1.1);
    l.activation_elems = std::max<std::int64_t>(1, Round(activation));
    l.param_elems = Round(dense_params * share[d] / share_sum);
    p.layers.push_back(std::move(l));
  }
  return p;
}

ModelProfile InceptionLike(int n, std::mt19937_64& gen) {
  ModelProfile p;
  p.minibatch_size = 32;
  for (int k = 1; k <= n; ++k) {
    LayerProfile l;
    l.layer_id = k;
    l.name = "mixed" + std::to_string(k);
    l.fwd_time = 8.0e-3 * Uniform(gen, 0.7, 1.3);
    l.bwd_time = l.fwd_time * Uniform(gen, 1.8, 2.2);
    l.activation_elems = Round(3.0e5 * Uniform(gen, 0.5, 1.5));
    l.param_elems = Round(2.5e5 * Uniform(gen, 0.5, 1.5));
    p.layers.push_back(std::move(l));
  }
  return p;
}

}  // namespace

ModelProfile SynthProfile(SynthKind kind, int n_layers, std::uint64_t seed) {
  if (n_layers < 2) throw ArgumentError("synthetic profiles need n_layers >= 2");
  std::mt19937_64 gen(seed);
  ModelProfile p;
  switch (kind) {
    case SynthKind::kUniform:
      p = UniformProfile(n_layers);
      break;
    case SynthKind::kVggLike:
      p = VggLike(n_layers, gen);
      break;
    case SynthKind::kInceptionLike:
      p = InceptionLike(n_layers, gen);
      break;
  }
  Validate(p);
  return p;
}

}  // namespace pipeplan
