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

#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>

#include <gtest/gtest.h>

#include "pipeplan/errors.h"

namespace pipeplan {
namespace {

namespace fs = std::filesystem;

class ProfileFileTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("pipeplan_profile_" +
            std::string(::testing::UnitTest::GetInstance()
                            ->current_test_info()
                            ->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path Write(const std::string& name, const std::string& text) {
    fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  fs::path dir_;
};

constexpr char kThreeLayers[] = R"({
  "minibatch_size": 64,
  "layers": [
    {"name": "conv1", "fwd_time": 0.5, "bwd_time": 1.0,
     "activation_elems": 1000, "param_elems": 20},
    {"name": "conv2", "fwd_time": 0.25, "bwd_time": 0.5,
     "activation_elems": 500, "param_elems": 40},
    {"name": "fc", "fwd_time": 0.125, "bwd_time": 0.25,
     "activation_elems": 10, "param_elems": 4000}
  ]
})";

TEST_F(ProfileFileTest, LoadsWellFormedFile) {
  ModelProfile p = LoadProfile(Write("p.json", kThreeLayers));
  ASSERT_EQ(p.num_layers(), 3);
  EXPECT_EQ(p.minibatch_size, 64);
  EXPECT_EQ(p.layer(1).name, "conv1");
  EXPECT_EQ(p.layer(3).layer_id, 3);
  EXPECT_DOUBLE_EQ(p.layer(2).total_time(), 0.75);
  EXPECT_EQ(p.layer(3).param_elems, 4000);
}

TEST_F(ProfileFileTest, SaveLoadRoundTrip) {
  ModelProfile p = SynthProfile(SynthKind::kInceptionLike, 9, 3);
  fs::path path = dir_ / "rt.json";
  SaveProfile(p, path);
  EXPECT_EQ(LoadProfile(path), p);
}

TEST_F(ProfileFileTest, NegativeTimeIsValidationError) {
  std::string text = kThreeLayers;
  text.replace(text.find("0.25"), 4, "-0.25");
  EXPECT_THROW(LoadProfile(Write("neg.json", text)), ValidationError);
}

TEST_F(ProfileFileTest, EmptyLayersIsValidationError) {
  EXPECT_THROW(
      LoadProfile(Write("empty.json", R"({"minibatch_size": 1, "layers": []})")),
      ValidationError);
}

TEST_F(ProfileFileTest, FormatErrors) {
  EXPECT_THROW(LoadProfile(dir_ / "missing.json"), FormatError);
  EXPECT_THROW(LoadProfile(Write("bad.json", "{\"layers\": [")), FormatError);
  std::string no_field = kThreeLayers;
  no_field.replace(no_field.find("\"param_elems\": 20"), 17, "\"params\": 20");
  try {
    LoadProfile(Write("nofield.json", no_field));
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("layers[0]"), std::string::npos)
        << e.what();
  }
  std::string frac = kThreeLayers;
  frac.replace(frac.find("1000"), 4, "10.5");
  EXPECT_THROW(LoadProfile(Write("frac.json", frac)), FormatError);
}

TEST(ProfileValidate, ZeroTotalTimeRejected) {
  ModelProfile p = SynthProfile(SynthKind::kUniform, 2, 0);
  p.layers[1].fwd_time = 0.0;
  p.layers[1].bwd_time = 0.0;
  EXPECT_THROW(Validate(p), ValidationError);
  p = SynthProfile(SynthKind::kUniform, 2, 0);
  p.layers[1].layer_id = 5;
  EXPECT_THROW(Validate(p), ValidationError);
}

TEST(HardwareValidate, RejectsNonPositive) {
  EXPECT_NO_THROW(Validate(HardwareSpec{4, 1e9, 4.0}));
  EXPECT_THROW(Validate(HardwareSpec{0, 1e9, 4.0}), ValidationError);
  EXPECT_THROW(Validate(HardwareSpec{4, 0.0, 4.0}), ValidationError);
  EXPECT_THROW(Validate(HardwareSpec{4, 1e9, -1.0}), ValidationError);
}

TEST(SynthProfile, UniformLayersAreIdentical) {
  ModelProfile p = SynthProfile(SynthKind::kUniform, 4, 0);
  ASSERT_EQ(p.num_layers(), 4);
  for (int l = 2; l <= 4; ++l) {
    EXPECT_EQ(p.layer(l).fwd_time, p.layer(1).fwd_time);
    EXPECT_EQ(p.layer(l).bwd_time, p.layer(1).bwd_time);
    EXPECT_EQ(p.layer(l).activation_elems, p.layer(1).activation_elems);
    EXPECT_EQ(p.layer(l).param_elems, p.layer(1).param_elems);
  }
}

TEST(SynthProfile, VggLikeConcentratesParamsAtTheEnd) {
  for (int n : {8, 16, 19, 24}) {
    for (std::uint64_t seed : {0, 7, 42}) {
      ModelProfile p = SynthProfile(SynthKind::kVggLike, n, seed);
      double total = 0.0, tail = 0.0;
      const int quarter = (n + 3) / 4;
      for (const LayerProfile& l : p.layers) {
        total += l.param_elems;
        if (l.layer_id > n - quarter) tail += l.param_elems;
      }
      EXPECT_GE(tail, 0.85 * total) << "n=" << n << " seed=" << seed;
    }
  }
}

TEST(SynthProfile, DeterministicPerSeed) {
  for (SynthKind kind :
       {SynthKind::kUniform, SynthKind::kVggLike, SynthKind::kInceptionLike}) {
    EXPECT_EQ(SynthProfile(kind, 12, 5), SynthProfile(kind, 12, 5));
    EXPECT_NO_THROW(Validate(SynthProfile(kind, 12, 5)));
  }
  EXPECT_NE(SynthProfile(SynthKind::kVggLike, 12, 5),
            SynthProfile(SynthKind::kVggLike, 12, 6));
}

TEST(SynthProfile, BadArguments) {
  EXPECT_THROW(SynthProfile(SynthKind::kUniform, 1, 0), ArgumentError);
  EXPECT_THROW(ParseSynthKind("resnet"), ArgumentError);
  for (SynthKind kind :
       {SynthKind::kUniform, SynthKind::kVggLike, SynthKind::kInceptionLike}) {
    EXPECT_EQ(ParseSynthKind(SynthKindName(kind)), kind);
  }
}

}  // namespace
}  // namespace pipeplan
