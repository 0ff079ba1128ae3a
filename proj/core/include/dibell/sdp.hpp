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

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dibell::sdp {

/// Coefficient of X_block(row, col) in a linear functional. Rows and columns
/// are 0-based; an off-diagonal entry contributes value * X(row, col) once
/// (X is symmetric, so (row, col) and (col, row) name the same variable).
struct Entry {
  int block;
  int row;
  int col;
  double value;
};

using LinearFunctional = std::vector<Entry>;

/// Solver-agnostic block SDP in standard primal form:
///
///   maximize    objective(X)
///   subject to  constraints[i](X) = rhs[i]
///               X = diag(X_0, X_1, ...) positive semidefinite.
struct SdpProblem {
  std::vector<int> block_sizes;
  std::vector<LinearFunctional> constraints;
  std::vector<double> rhs;
  LinearFunctional objective;

  int add_block(int size);
  int add_constraint(LinearFunctional f, double value);

  /// Throws std::invalid_argument on out-of-range indices or non-finite data.
  void validate() const;

  std::size_t num_constraints() const { return constraints.size(); }
};

/// Evaluates a functional on block matrices.
double evaluate(const LinearFunctional& f, const std::vector<Eigen::MatrixXd>& x);

enum class SdpStatus {
  optimal,
  primal_infeasible,
  dual_infeasible,
  iteration_limit,
  numerical_error,
};

const char* to_string(SdpStatus status);

struct SdpOptions {
  double feasibility_tol = 1e-8;  // relative residual norms
  double gap_tol = 1e-8;          // relative duality gap
  int max_iterations = 100;
  double step_fraction = 0.95;
};

struct SdpSolution {
  SdpStatus status = SdpStatus::numerical_error;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  /// dual_objective - primal_objective.
  double gap = 0.0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  int iterations = 0;
  std::vector<Eigen::MatrixXd> x;  // primal blocks
  std::vector<Eigen::MatrixXd> z;  // dual slack blocks
  Eigen::VectorXd y;               // constraint multipliers
};

/// Infeasible-start primal-dual interior-point method (HKM search
/// direction, Mehrotra predictor-corrector). The dual it works with is
///
///   minimize  rhs·y  subject to  Σ y_i A_i - C = Z ⪰ 0.
///
/// Infeasibility is reported from Farkas certificates built from the
/// diverging iterates.
SdpSolution solve(const SdpProblem& problem, const SdpOptions& options = {});

/// SDPA sparse format. The problem maps onto SDPA's dual form (max F0•Y,
/// Fi•Y = ci), so F0 = objective, Fi = constraint i, ci = rhs[i]. Block
/// and matrix indices are written 1-based, upper triangle only.
void write_sdpa(const SdpProblem& problem, std::ostream& out);
SdpProblem read_sdpa(std::istream& in);

}  // namespace dibell::sdp
