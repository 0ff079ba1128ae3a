// Copyright 2026 The dibell Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace dibell {

// Coordinate outside the 1-based label range of a scenario.
class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// A requested enumeration would not fit the configured capacity.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// The operation is not defined for the given scenario (e.g. CHSH with k != 2).
class UnsupportedError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An input violates a documented invariant (non-normalized behavior,
// non-tight inequality, ...).
class InvariantError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical backend failed to produce a usable answer.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dibell
