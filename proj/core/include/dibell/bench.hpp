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

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dibell/network.hpp"
#include "dibell/sampler.hpp"

namespace dibell {

/// Per-sample wall time of one path, in seconds.
struct MethodTiming {
  std::string method;
  double mean = 0.0;
  double median = 0.0;
  double stddev = 0.0;
  std::size_t timed = 0;  // samples that contributed

  double coefficient_of_variation() const { return mean > 0.0 ? stddev / mean : 0.0; }
  bool operator==(const MethodTiming&) const = default;
};

struct BenchReport {
  std::string task;  // "pguess" or "bell_lp"
  Scenario scenario{2, 2};
  std::size_t n = 0;
  MethodTiming solver;
  MethodTiming network;
  /// solver.mean / network.mean.
  double speed_up = 0.0;
  std::size_t solver_failures = 0;  // excluded from the solver timing
  /// FNV-1a of the behavior vectors each path consumed; equal by construction.
  std::string input_hash;
  std::string hardware;
  std::string protocol;
  nlohmann::json config;

  bool operator==(const BenchReport&) const = default;
};

struct BenchOptions {
  int guessed_setting = 1;
  /// Untimed passes over the first samples, per path.
  std::size_t warmup = 10;
  nlohmann::json config = nlohmann::json::object();
};

/// Solver path: LP for the optimal inequality, then the level-2 SDP bound.
/// Network path: one forward pass per behavior. Same n behaviors, single
/// threaded; shared setup (polytope, moment structure, model) is not timed.
BenchReport bench_pguess(const std::vector<LabeledRecord>& data, const nn::Network& model,
                         std::size_t n, const BenchOptions& options = {});

/// As bench_pguess with the LP alone as the solver path.
BenchReport bench_bell_lp(const std::vector<LabeledRecord>& data, const nn::Network& model,
                          std::size_t n, const BenchOptions& options = {});

/// CPU model and thread count, best effort.
std::string hardware_note();

nlohmann::json to_json(const BenchReport& r);
BenchReport bench_report_from_json(const nlohmann::json& j);

}  // namespace dibell
