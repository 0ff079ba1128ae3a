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

#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace dibell::lp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class RowSense { less_equal, equal, greater_equal };

/// maximize objective·x subject to rows (A x {<=,=,>=} rhs) and
/// lower <= x <= upper. Bounds may be infinite.
struct LinearProgram {
  std::vector<double> objective;
  std::vector<double> lower;
  std::vector<double> upper;
  Eigen::MatrixXd rows;
  std::vector<double> rhs;
  std::vector<RowSense> sense;

  std::size_t num_vars() const { return objective.size(); }
  std::size_t num_rows() const { return rhs.size(); }
};

enum class SimplexStatus { optimal, infeasible, unbounded, iteration_limit };

const char* to_string(SimplexStatus status);

struct SimplexOptions {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-9;
  int max_iterations = 10000;
  // Consecutive degenerate pivots before switching to Bland's rule.
  int degenerate_switch = 50;
};

struct SimplexResult {
  SimplexStatus status = SimplexStatus::iteration_limit;
  std::vector<double> x;
  std::vector<double> duals;  // one multiplier per row
  double objective = 0.0;
  double dual_objective = 0.0;
  /// dual_objective - objective, computed from the duals and the bounds,
  /// independently of the tableau.
  double duality_gap = 0.0;
  std::vector<bool> basic;  // per structural variable
  int iterations = 0;
};

/// Dense two-phase bounded-variable primal simplex. Returns a basic
/// optimal solution when one exists.
SimplexResult solve(const LinearProgram& lp, const SimplexOptions& options = {});

}  // namespace dibell::lp
