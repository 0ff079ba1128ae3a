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

#include <string>
#include <vector>

#include "dibell/facets.hpp"
#include "dibell/scenario.hpp"

namespace dibell {

/// Optimum of the separating LP at or below this is treated as "no
/// separating inequality" (the behavior is local or on the boundary).
inline constexpr double kTolSeparation = 1e-7;
inline constexpr double kTolSoundness = 1e-8;
inline constexpr double kMaxLpGap = 1e-8;

enum class LpStatus { optimal, local_behavior, infeasible, numerical_failure };

const char* to_string(LpStatus status);

struct LpSolution {
  std::vector<double> h;
  double c = 0.0;
  /// h·P - c for the returned (canonical) inequality.
  double violation = 0.0;
  LpStatus status = LpStatus::numerical_failure;
  /// Raw optimum of the box-constrained LP, before canonicalization.
  double lp_objective = 0.0;
  double duality_gap = 0.0;
};

/// Best Bell inequality for a behavior: maximizes h·P - c over
/// -1 <= h_i <= 1, c free, subject to h·v <= c for every local vertex.
/// The optimum is returned in the canonical form of LocalPolytope, so
/// h·v <= c holds with equality on the spanning vertices and max|h_i| = 1.
LpSolution find_optimal_bell_inequality(const Behavior& behavior,
                                        const LocalPolytope& polytope);

/// A basic optimal solution of max h·P over the no-signaling polytope.
/// Throws InvariantError unless the inequality is tight and not already
/// implied by positivity and normalization; NumericalError if the LP fails.
Behavior find_pr_box(const BellInequality& ineq, const LocalPolytope& polytope);

}  // namespace dibell
