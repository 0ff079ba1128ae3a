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

#include "dibell/separation.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "dibell/error.hpp"
#include "dibell/simplex.hpp"

namespace dibell {

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::local_behavior: return "local_behavior";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

LpSolution find_optimal_bell_inequality(const Behavior& behavior,
                                        const LocalPolytope& polytope) {
  const Scenario& s = polytope.scenario();
  if (!(behavior.scenario() == s)) {
    throw std::invalid_argument(
        fmt::format("behavior is {} but polytope is {}",
                    behavior.scenario().to_string(), s.to_string()));
  }
  const std::size_t dim = s.dim();
  const auto& vertices = polytope.vertices();

  // Variables: h_0..h_{dim-1}, c.
  lp::LinearProgram prog;
  prog.objective.assign(behavior.values().begin(), behavior.values().end());
  prog.objective.push_back(-1.0);
  prog.lower.assign(dim, -1.0);
  prog.upper.assign(dim, 1.0);
  prog.lower.push_back(-lp::kInfinity);
  prog.upper.push_back(lp::kInfinity);
  prog.rows.resize(static_cast<Eigen::Index>(vertices.size()),
                   static_cast<Eigen::Index>(dim + 1));
  for (std::size_t v = 0; v < vertices.size(); ++v) {
    const auto p = vertices[v].behavior.values();
    const auto r = static_cast<Eigen::Index>(v);
    for (std::size_t i = 0; i < dim; ++i) {
      prog.rows(r, static_cast<Eigen::Index>(i)) = p[i];
    }
    prog.rows(r, static_cast<Eigen::Index>(dim)) = -1.0;
  }
  prog.rhs.assign(vertices.size(), 0.0);
  prog.sense.assign(vertices.size(), lp::RowSense::less_equal);

  const lp::SimplexResult res = lp::solve(prog);
  LpSolution out;
  if (res.status == lp::SimplexStatus::infeasible) {
    out.status = LpStatus::infeasible;
    return out;
  }
  if (res.status != lp::SimplexStatus::optimal) {
    out.status = LpStatus::numerical_failure;
    return out;
  }
  out.lp_objective = res.objective;
  out.duality_gap = res.duality_gap;
  const std::vector<double> raw_h(res.x.begin(), res.x.begin() + static_cast<long>(dim));
  const double raw_c = res.x[dim];

  if (std::abs(res.duality_gap) > kMaxLpGap ||
      polytope.classical_maximum(raw_h) > raw_c + kTolSoundness) {
    out.h = raw_h;
    out.c = raw_c;
    out.violation = res.objective;
    out.status = LpStatus::numerical_failure;
    return out;
  }
  if (res.objective <= kTolSeparation) {
    out.h = raw_h;
    out.c = raw_c;
    out.violation = res.objective;
    out.status = LpStatus::local_behavior;
    return out;
  }

  BellInequality canonical = polytope.canonicalize(raw_h);
  out.violation = canonical.value(behavior) - canonical.c;
  out.h = std::move(canonical.h);
  out.c = canonical.c;
  out.status = out.violation > 0.0 ? LpStatus::optimal : LpStatus::numerical_failure;
  return out;
}

Behavior find_pr_box(const BellInequality& ineq, const LocalPolytope& polytope) {
  const Scenario& s = polytope.scenario();
  if (!(ineq.scenario == s)) {
    throw std::invalid_argument("inequality and polytope scenarios differ");
  }
  if (!polytope.is_tight(ineq)) {
    throw InvariantError("find_pr_box requires a tight inequality");
  }
  // Σ_xy max_ab h_abxy <= c means every normalized nonnegative table, even a
  // signaling one, satisfies the inequality: a positivity-type face, not a
  // Bell inequality.
  const std::size_t kk = static_cast<std::size_t>(s.k()) * s.k();
  double trivial_bound = 0.0;
  for (std::size_t block = 0; block < s.dim(); block += kk) {
    trivial_bound += *std::max_element(ineq.h.begin() + static_cast<long>(block),
                                       ineq.h.begin() + static_cast<long>(block + kk));
  }
  if (trivial_bound <= ineq.c + kTolTight) {
    throw InvariantError(
        "inequality is implied by positivity and normalization; it has no PR box");
  }

  const auto& normals = polytope.identity_normals();
  const auto& rhs = polytope.identity_rhs();
  lp::LinearProgram prog;
  prog.objective = ineq.h;
  prog.lower.assign(s.dim(), 0.0);
  prog.upper.assign(s.dim(), 1.0);
  prog.rows = normals;
  prog.rhs.assign(rhs.data(), rhs.data() + rhs.size());
  prog.sense.assign(prog.rhs.size(), lp::RowSense::equal);

  const lp::SimplexResult res = lp::solve(prog);
  if (res.status != lp::SimplexStatus::optimal) {
    throw NumericalError(fmt::format("PR-box LP ended with status {}",
                                     lp::to_string(res.status)));
  }
  std::vector<double> p = res.x;
  for (double& v : p) {
    if (std::abs(v) < 1e-13) v = 0.0;
  }
  Behavior box(s, std::move(p));
  if (!check_no_signaling(box).ok) {
    throw NumericalError("PR-box LP solution violates no-signaling");
  }
  return box;
}

}  // namespace dibell
