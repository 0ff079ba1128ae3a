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

#include "dibell/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dibell::lp {

const char* to_string(SimplexStatus status) {
  switch (status) {
    case SimplexStatus::optimal: return "optimal";
    case SimplexStatus::infeasible: return "infeasible";
    case SimplexStatus::unbounded: return "unbounded";
    case SimplexStatus::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

namespace {

// Column layout: [structural | slack | artificial].
class Tableau {
 public:
  Tableau(const LinearProgram& lp, const SimplexOptions& opt) : opt_(opt) {
    n_ = lp.num_vars();
    m_ = lp.num_rows();
    const std::size_t total = n_ + 2 * m_;
    cols_.setZero(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(total));
    lower_.assign(total, 0.0);
    upper_.assign(total, 0.0);
    value_.assign(total, 0.0);
    cost_.assign(total, 0.0);
    b_ = Eigen::Map<const Eigen::VectorXd>(lp.rhs.data(),
                                           static_cast<Eigen::Index>(m_));

    for (std::size_t j = 0; j < n_; ++j) {
      lower_[j] = lp.lower[j];
      upper_[j] = lp.upper[j];
      cost_[j] = lp.objective[j];
      if (std::isfinite(lower_[j])) {
        value_[j] = lower_[j];
      } else if (std::isfinite(upper_[j])) {
        value_[j] = upper_[j];
      } else {
        value_[j] = 0.0;
      }
    }
    cols_.leftCols(static_cast<Eigen::Index>(n_)) = lp.rows;

    basis_.assign(m_, 0);
    in_basis_.assign(total, -1);
    for (std::size_t i = 0; i < m_; ++i) {
      const std::size_t s = n_ + i;
      const std::size_t a = n_ + m_ + i;
      cols_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s)) = 1.0;
      switch (lp.sense[i]) {
        case RowSense::less_equal: lower_[s] = 0.0; upper_[s] = kInfinity; break;
        case RowSense::equal: lower_[s] = 0.0; upper_[s] = 0.0; break;
        case RowSense::greater_equal: lower_[s] = -kInfinity; upper_[s] = 0.0; break;
      }
      double activity = 0.0;
      for (std::size_t j = 0; j < n_; ++j) {
        activity += lp.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *
                    value_[j];
      }
      const double residual = lp.rhs[i] - activity;
      const double clipped = std::clamp(residual, lower_[s], upper_[s]);
      lower_[a] = 0.0;
      upper_[a] = kInfinity;
      if (std::abs(residual - clipped) <= opt_.feasibility_tol) {
        value_[s] = residual;
        basis_[i] = s;
        cols_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) = 1.0;
        upper_[a] = 0.0;  // never needed for this row
      } else {
        value_[s] = clipped;
        const double sigma = residual > clipped ? 1.0 : -1.0;
        cols_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) = sigma;
        value_[a] = std::abs(residual - clipped);
        basis_[i] = a;
        needs_phase_one_ = true;
      }
      in_basis_[basis_[i]] = static_cast<int>(i);
    }

    // Initial basis matrix is diagonal with entries +-1.
    tab_ = cols_;
    for (std::size_t i = 0; i < m_; ++i) {
      const double pivot = cols_(static_cast<Eigen::Index>(i),
                                 static_cast<Eigen::Index>(basis_[i]));
      tab_.row(static_cast<Eigen::Index>(i)) /= pivot;
    }
  }

  SimplexStatus run_phase_one(int& iterations) {
    if (!needs_phase_one_) return SimplexStatus::optimal;
    std::vector<double> phase_cost(cost_.size(), 0.0);
    for (std::size_t i = 0; i < m_; ++i) phase_cost[n_ + m_ + i] = -1.0;
    const SimplexStatus st = iterate(phase_cost, iterations);
    if (st == SimplexStatus::iteration_limit) return st;
    double infeasibility = 0.0;
    for (std::size_t i = 0; i < m_; ++i) infeasibility += value_[n_ + m_ + i];
    if (infeasibility > opt_.feasibility_tol * std::max<double>(1.0, m_)) {
      return SimplexStatus::infeasible;
    }
    for (std::size_t i = 0; i < m_; ++i) {
      upper_[n_ + m_ + i] = 0.0;
      value_[n_ + m_ + i] = 0.0;
    }
    return SimplexStatus::optimal;
  }

  SimplexStatus run_phase_two(int& iterations) { return iterate(cost_, iterations); }

  // Recomputes basic values from the original columns, then the duals.
  void finalize(SimplexResult& out) {
    const auto m = static_cast<Eigen::Index>(m_);
    Eigen::MatrixXd basis_matrix(m, m);
    Eigen::VectorXd basis_cost(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      basis_matrix.col(i) = cols_.col(static_cast<Eigen::Index>(basis_[i]));
      basis_cost(i) = cost_[basis_[i]];
    }
    Eigen::VectorXd rhs = b_;
    for (std::size_t j = 0; j < value_.size(); ++j) {
      if (in_basis_[j] < 0 && value_[j] != 0.0) {
        rhs -= cols_.col(static_cast<Eigen::Index>(j)) * value_[j];
      }
    }
    Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
    if (m > 0) {
      const Eigen::PartialPivLU<Eigen::MatrixXd> lu(basis_matrix);
      const Eigen::VectorXd xb = lu.solve(rhs);
      for (Eigen::Index i = 0; i < m; ++i) value_[basis_[i]] = xb(i);
      y = lu.transpose().solve(basis_cost);
    }

    out.x.assign(value_.begin(), value_.begin() + static_cast<long>(n_));
    out.objective = 0.0;
    for (std::size_t j = 0; j < n_; ++j) out.objective += cost_[j] * value_[j];
    out.duals.assign(y.data(), y.data() + y.size());

    double dual = y.dot(b_);
    for (std::size_t j = 0; j < value_.size(); ++j) {
      const double d = cost_[j] - y.dot(cols_.col(static_cast<Eigen::Index>(j)));
      if (std::abs(d) <= opt_.optimality_tol) continue;
      const double bound = d > 0.0 ? upper_[j] : lower_[j];
      if (!std::isfinite(bound)) {
        dual = kInfinity;
        break;
      }
      dual += d * bound;
    }
    out.dual_objective = dual;
    out.duality_gap = dual - out.objective;
    out.basic.assign(n_, false);
    for (std::size_t j = 0; j < n_; ++j) out.basic[j] = in_basis_[j] >= 0;
  }

 private:
  SimplexStatus iterate(const std::vector<double>& cost, int& iterations) {
    const auto m = static_cast<Eigen::Index>(m_);
    const std::size_t total = cost.size();
    int degenerate_run = 0;
    while (iterations < opt_.max_iterations) {
      const bool bland = degenerate_run >= opt_.degenerate_switch;
      Eigen::VectorXd basis_cost(m);
      for (Eigen::Index i = 0; i < m; ++i) basis_cost(i) = cost[basis_[i]];

      // Pricing.
      std::size_t entering = total;
      double best = 0.0;
      double direction = 0.0;
      for (std::size_t j = 0; j < total; ++j) {
        if (in_basis_[j] >= 0 || lower_[j] == upper_[j]) continue;
        const double d = cost[j] - basis_cost.dot(tab_.col(static_cast<Eigen::Index>(j)));
        const bool can_increase = value_[j] < upper_[j] - opt_.feasibility_tol;
        const bool can_decrease = value_[j] > lower_[j] + opt_.feasibility_tol;
        double dir = 0.0;
        if (d > opt_.optimality_tol && can_increase) dir = 1.0;
        if (d < -opt_.optimality_tol && can_decrease) dir = -1.0;
        if (dir == 0.0) continue;
        if (bland) {
          entering = j;
          direction = dir;
          break;
        }
        if (std::abs(d) > best) {
          best = std::abs(d);
          entering = j;
          direction = dir;
        }
      }
      if (entering == total) return SimplexStatus::optimal;

      // Ratio test.
      const auto col = tab_.col(static_cast<Eigen::Index>(entering));
      double step = upper_[entering] - lower_[entering];
      Eigen::Index leaving = -1;
      double leaving_alpha = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        const double alpha = direction * col(i);
        const std::size_t bv = basis_[i];
        double limit = kInfinity;
        if (alpha > opt_.pivot_tol) {
          limit = (value_[bv] - lower_[bv]) / alpha;
        } else if (alpha < -opt_.pivot_tol) {
          limit = (upper_[bv] - value_[bv]) / -alpha;
        } else {
          continue;
        }
        limit = std::max(limit, 0.0);
        bool take = limit < step - 1e-12;
        if (!take && leaving >= 0 && limit <= step + 1e-12) {
          take = bland ? basis_[i] < basis_[leaving]
                       : std::abs(alpha) > std::abs(leaving_alpha);
        }
        if (take) {
          step = limit;
          leaving = i;
          leaving_alpha = alpha;
        }
      }
      if (!std::isfinite(step)) return SimplexStatus::unbounded;

      ++iterations;
      degenerate_run = step <= 1e-12 ? degenerate_run + 1 : 0;
      // Move along the edge.
      value_[entering] += direction * step;
      for (Eigen::Index i = 0; i < m; ++i) {
        value_[basis_[i]] -= direction * step * col(i);
      }
      if (leaving < 0) continue;  // bound flip

      const std::size_t out_var = basis_[leaving];
      value_[out_var] = leaving_alpha > 0.0 ? lower_[out_var] : upper_[out_var];
      pivot(leaving, entering);
    }
    return SimplexStatus::iteration_limit;
  }

  void pivot(Eigen::Index row, std::size_t entering) {
    const auto e = static_cast<Eigen::Index>(entering);
    const double p = tab_(row, e);
    tab_.row(row) /= p;
    for (Eigen::Index i = 0; i < tab_.rows(); ++i) {
      if (i == row) continue;
      const double f = tab_(i, e);
      if (f != 0.0) tab_.row(i) -= f * tab_.row(row);
    }
    in_basis_[basis_[row]] = -1;
    basis_[row] = entering;
    in_basis_[entering] = static_cast<int>(row);
  }

  const SimplexOptions& opt_;
  std::size_t n_ = 0;
  std::size_t m_ = 0;
  Eigen::MatrixXd cols_;  // original constraint columns
  Eigen::MatrixXd tab_;   // B^{-1} * cols_
  Eigen::VectorXd b_;
  std::vector<double> lower_, upper_, value_, cost_;
  std::vector<std::size_t> basis_;
  std::vector<int> in_basis_;
  bool needs_phase_one_ = false;
};

void validate(const LinearProgram& lp) {
  const std::size_t n = lp.num_vars();
  const std::size_t m = lp.num_rows();
  if (lp.lower.size() != n || lp.upper.size() != n || lp.sense.size() != m ||
      static_cast<std::size_t>(lp.rows.rows()) != m ||
      (m > 0 && static_cast<std::size_t>(lp.rows.cols()) != n)) {
    throw std::invalid_argument("linear program dimensions are inconsistent");
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (lp.lower[j] > lp.upper[j]) {
      throw std::invalid_argument("linear program has an empty variable range");
    }
  }
}

}  // namespace

SimplexResult solve(const LinearProgram& lp, const SimplexOptions& options) {
  validate(lp);
  SimplexResult out;
  Tableau tableau(lp, options);
  int iterations = 0;
  SimplexStatus st = tableau.run_phase_one(iterations);
  if (st == SimplexStatus::optimal) st = tableau.run_phase_two(iterations);
  out.status = st;
  out.iterations = iterations;
  if (st == SimplexStatus::optimal) tableau.finalize(out);
  return out;
}

}  // namespace dibell::lp
