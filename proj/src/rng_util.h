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

#ifndef PIPEPLAN_SRC_RNG_UTIL_H_
#define PIPEPLAN_SRC_RNG_UTIL_H_

#include <cstdint>
#include <random>

namespace pipeplan::internal {

// std::uniform_real_distribution is implementation-defined; this mapping of
// the 64-bit Mersenne Twister output is not, so synthetic data is identical
// on every standard library.
inline double Uniform(std::mt19937_64& gen, double lo, double hi) {
  const double unit = static_cast<double>(gen() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * unit;
}

}  // namespace pipeplan::internal

#endif  // PIPEPLAN_SRC_RNG_UTIL_H_
