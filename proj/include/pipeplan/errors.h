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

#ifndef PIPEPLAN_ERRORS_H_
#define PIPEPLAN_ERRORS_H_

#include <stdexcept>
#include <string>

namespace pipeplan {

// Malformed input text (profile/plan files, config strings).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Well-formed input that violates a domain invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller passed an out-of-range index, count or incompatible object.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Deadlock, missing steady-state window, or an uncommitted weight version.
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A ledger refers to a weight version that has not been produced yet.
class ConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pipeplan

#endif  // PIPEPLAN_ERRORS_H_
