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

#include "dibell/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

namespace dibell::sdp {

int SdpProblem::add_block(int size) {
  if (size < 1) throw std::invalid_argument("block size must be positive");
  block_sizes.push_back(size);
  return static_cast<int>(block_sizes.size()) - 1;
}

int SdpProblem::add_constraint(LinearFunctional f, double value) {
  constraints.push_back(std::move(f));
  rhs.push_back(value);
  return static_cast<int>(constraints.size()) - 1;
}

namespace {

void validate_functional(const LinearFunctional& f,
                         const std::vector<int>& sizes, const char* what) {
  for (const Entry& e : f) {
    if (e.block < 0 || e.block >= static_cast<int>(sizes.size())) {
      throw std::invalid_argument(fmt::format("{}: block {} out of range", what, e.block));
    }
    const int n = sizes[e.block];
    if (e.row < 0 || e.row >= n || e.col < 0 || e.col >= n) {
      throw std::invalid_argument(fmt::format("{}: entry ({},{}) outside block {} of size {}",
                                              what, e.row, e.col, e.block, n));
    }
    if (!std::isfinite(e.value)) {
      throw std::invalid_argument(fmt::format("{}: non-finite coefficient", what));
    }
  }
}

}  // namespace

void SdpProblem::validate() const {
  if (block_sizes.empty()) throw std::invalid_argument("SDP has no blocks");
  for (int n : block_sizes) {
    if (n < 1) throw std::invalid_argument("SDP block size must be positive");
  }
  if (constraints.size() != rhs.size()) {
    throw std::invalid_argument("SDP constraint and rhs counts differ");
  }
  for (double v : rhs) {
    if (!std::isfinite(v)) throw std::invalid_argument("SDP rhs is not finite");
  }
  validate_functional(objective, block_sizes, "objective");
  for (const auto& c : constraints) validate_functional(c, block_sizes, "constraint");
}

double evaluate(const LinearFunctional& f, const std::vector<Eigen::MatrixXd>& x) {
  double sum = 0.0;
  for (const Entry& e : f) sum += e.value * x[e.block](e.row, e.col);
  return sum;
}

const char* to_string(SdpStatus status) {
  switch (status) {
    case SdpStatus::optimal: return "optimal";
    case SdpStatus::primal_infeasible: return "primal_infeasible";
    case SdpStatus::dual_infeasible: return "dual_infeasible";
    case SdpStatus::iteration_limit: return "iteration_limit";
    case SdpStatus::numerical_error: return "numerical_error";
  }
  return "unknown";
}

namespace {

using Blocks = std::vector<Eigen::MatrixXd>;

// Symmetric-matrix form of a functional restricted to one block: both
// orientations of off-diagonal entries carry half the coefficient.
struct MatrixTerm {
  int row;
  int col;
  double value;
};

struct BlockPart {
  int block;
  std::vector<MatrixTerm> terms;
};

struct SymMatrix {
  std::vector<BlockPart> parts;
  std::size_t nnz = 0;
};

SymMatrix to_matrix(const LinearFunctional& f) {
  SymMatrix out;
  for (const Entry& e : f) {
    auto it = std::find_if(out.parts.begin(), out.parts.end(),
                           [&](const BlockPart& p) { return p.block == e.block; });
    if (it == out.parts.end()) {
      out.parts.push_back({e.block, {}});
      it = std::prev(out.parts.end());
    }
    if (e.row == e.col) {
      it->terms.push_back({e.row, e.col, e.value});
    } else {
      it->terms.push_back({e.row, e.col, 0.5 * e.value});
      it->terms.push_back({e.col, e.row, 0.5 * e.value});
    }
  }
  for (const auto& p : out.parts) out.nnz += p.terms.size();
  return out;
}

// <A, M> for a symmetric sparse A and a dense (not necessarily symmetric) M.
double inner(const BlockPart& part, const Eigen::MatrixXd& m) {
  double s = 0.0;
  for (const MatrixTerm& t : part.terms) s += t.value * m(t.col, t.row);
  return s;
}

double inner(const SymMatrix& a, const Blocks& m) {
  double s = 0.0;
  for (const auto& part : a.parts) s += inner(part, m[part.block]);
  return s;
}

void add_scaled(const SymMatrix& a, double scale, Blocks& out) {
  for (const auto& part : a.parts) {
    auto& blk = out[part.block];
    for (const MatrixTerm& t : part.terms) blk(t.row, t.col) += scale * t.value;
  }
}

double frobenius(const Blocks& b) {
  double s = 0.0;
  for (const auto& m : b) s += m.squaredNorm();
  return std::sqrt(s);
}

double trace_product(const Blocks& a, const Blocks& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i].cwiseProduct(b[i]).sum();
  return s;
}

void symmetrize(Blocks& b) {
  for (auto& m : b) m = 0.5 * (m + m.transpose()).eval();
}

// Largest step t in (0, inf] with M + t dM still positive semidefinite,
// given a Cholesky factor of M.
double max_step(const Eigen::LLT<Eigen::MatrixXd>& chol, const Eigen::MatrixXd& dm) {
  const Eigen::MatrixXd l_inv_dm = chol.matrixL().solve(dm);
  const Eigen::MatrixXd scaled = chol.matrixL().solve(l_inv_dm.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (scaled + scaled.transpose()),
                                                    Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  if (lmin >= 0.0) return std::numeric_limits<double>::infinity();
  return -1.0 / lmin;
}

double min_eigenvalue(const Blocks& b) {
  double lmin = std::numeric_limits<double>::infinity();
  for (const auto& m : b) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    lmin = std::min(lmin, es.eigenvalues()(0));
  }
  return lmin;
}

// Cholesky factorization of the Schur complement. Near the optimum the
// matrix is numerically semidefinite at best; a growing diagonal shift is
// tried before giving up, and solves are refined against the unshifted
// matrix.
class SchurSolver {
 public:
  explicit SchurSolver(Eigen::MatrixXd o) : o_(std::move(o)) {
    const double scale = std::max(o_.diagonal().cwiseAbs().maxCoeff(), 1e-300);
    double shift = 0.0;
    for (int attempt = 0; attempt < 6; ++attempt) {
      if (attempt > 0) shift = scale * (attempt == 1 ? 1e-14 : shift / scale * 100.0);
      llt_.compute(o_ + shift * Eigen::MatrixXd::Identity(o_.rows(), o_.cols()));
      if (llt_.info() == Eigen::Success) {
        ok_ = true;
        return;
      }
    }
  }

  bool ok() const { return ok_; }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    Eigen::VectorXd x = llt_.solve(rhs);
    for (int i = 0; i < 2; ++i) x += llt_.solve(rhs - o_ * x);
    return x;
  }

 private:
  Eigen::MatrixXd o_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  bool ok_ = false;
};

class InteriorPoint {
 public:
  static constexpr int kStallIterations = 10;

  InteriorPoint(const SdpProblem& p, const SdpOptions& opt)
      : problem_(p), opt_(opt), m_(p.constraints.size()) {
    for (const auto& c : p.constraints) a_.push_back(to_matrix(c));
    c_ = to_matrix(p.objective);
    b_ = Eigen::Map<const Eigen::VectorXd>(p.rhs.data(), static_cast<Eigen::Index>(m_));
    for (int n : p.block_sizes) total_dim_ += n;

    c_dense_ = zero_blocks();
    add_scaled(c_, 1.0, c_dense_);
    c_norm_ = frobenius(c_dense_);

    // Constraint membership per block, split by density for the Schur
    // complement assembly.
    per_block_.resize(p.block_sizes.size());
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t k = 0; k < a_[i].parts.size(); ++k) {
        per_block_[a_[i].parts[k].block].push_back({i, k});
      }
    }
  }

  // On failure the best iterate seen (by its worst relative residual) is
  // returned with the failure status.
  SdpSolution run() {
    SdpSolution out;
    SdpSolution best;
    double best_merit = std::numeric_limits<double>::infinity();
    int best_iter = 0;
    initialize();

    for (int iter = 0; iter <= opt_.max_iterations; ++iter) {
      out.iterations = iter;
      const Eigen::VectorXd rp = b_ - apply_a(x_);  // primal residual
      Blocks rd = apply_at(y_);                     // dual residual A^T y - Z - C
      for (std::size_t k = 0; k < rd.size(); ++k) rd[k] -= z_[k] + c_dense_[k];

      const double pobj = trace_product(c_dense_, x_);
      const double dobj = b_.dot(y_);
      const double pinf = rp.norm() / (1.0 + b_.norm());
      const double dinf = frobenius(rd) / (1.0 + c_norm_);
      const double rel_gap = std::abs(dobj - pobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
      fill(out, pobj, dobj, pinf, dinf);

      if (pinf <= opt_.feasibility_tol && dinf <= opt_.feasibility_tol &&
          rel_gap <= opt_.gap_tol) {
        out.status = SdpStatus::optimal;
        return out;
      }
      if (primal_infeasibility_certificate(dobj)) {
        out.status = SdpStatus::primal_infeasible;
        return out;
      }
      if (dual_infeasibility_certificate(pobj)) {
        out.status = SdpStatus::dual_infeasible;
        return out;
      }
      const double merit = std::max({pinf, dinf, rel_gap});
      if (merit < best_merit) {
        best_merit = merit;
        best_iter = iter;
        best = out;
      }
      if (iter == opt_.max_iterations) break;
      if (iter - best_iter > kStallIterations) {
        best.status = SdpStatus::numerical_error;
        best.iterations = iter;
        return best;
      }
      if (!step(rd)) {
        best.status = SdpStatus::numerical_error;
        best.iterations = iter;
        return best;
      }
    }
    best.status = SdpStatus::iteration_limit;
    best.iterations = out.iterations;
    return best;
  }

 private:
  Blocks zero_blocks() const {
    Blocks b;
    for (int n : problem_.block_sizes) b.push_back(Eigen::MatrixXd::Zero(n, n));
    return b;
  }

  Eigen::VectorXd apply_a(const Blocks& x) const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(m_));
    for (std::size_t i = 0; i < m_; ++i) out(static_cast<Eigen::Index>(i)) = inner(a_[i], x);
    return out;
  }

  Blocks apply_at(const Eigen::VectorXd& y) const {
    Blocks out = zero_blocks();
    for (std::size_t i = 0; i < m_; ++i) {
      const double v = y(static_cast<Eigen::Index>(i));
      if (v != 0.0) add_scaled(a_[i], v, out);
    }
    return out;
  }

  void initialize() {
    // Starting point scaling as in CSDP.
    double alpha = 0.0;
    double beta = c_norm_;
    for (std::size_t i = 0; i < m_; ++i) {
      Blocks ai = zero_blocks();
      add_scaled(a_[i], 1.0, ai);
      const double norm = frobenius(ai);
      alpha = std::max(alpha, (1.0 + std::abs(b_(static_cast<Eigen::Index>(i)))) / (1.0 + norm));
      beta = std::max(beta, norm);
    }
    alpha *= static_cast<double>(total_dim_);
    beta = (1.0 + beta) / std::sqrt(static_cast<double>(total_dim_));
    x_.clear();
    z_.clear();
    for (int n : problem_.block_sizes) {
      x_.push_back(10.0 * alpha * Eigen::MatrixXd::Identity(n, n));
      z_.push_back(10.0 * beta * Eigen::MatrixXd::Identity(n, n));
    }
    y_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m_));
  }

  void fill(SdpSolution& out, double pobj, double dobj, double pinf, double dinf) const {
    out.primal_objective = pobj;
    out.dual_objective = dobj;
    out.gap = dobj - pobj;
    out.primal_infeasibility = pinf;
    out.dual_infeasibility = dinf;
    out.x = x_;
    out.z = z_;
    out.y = y_;
  }

  // y with A^T y ⪰ 0 and b·y < 0 proves {A(X) = b, X ⪰ 0} empty.
  bool primal_infeasibility_certificate(double dobj) const {
    if (!(dobj < -1e6 * (1.0 + c_norm_))) return false;
    const Eigen::VectorXd ray = y_ / -dobj;
    return min_eigenvalue(apply_at(ray)) >= -1e-7;
  }

  // X ⪰ 0 with A(X) = 0 and C•X > 0 proves the dual empty.
  bool dual_infeasibility_certificate(double pobj) const {
    if (!(pobj > 1e6 * (1.0 + b_.norm()))) return false;
    Blocks ray = x_;
    for (auto& m : ray) m /= pobj;
    return apply_a(ray).norm() <= 1e-7;
  }

  Eigen::MatrixXd schur(const Blocks& w) const {
    const auto m = static_cast<Eigen::Index>(m_);
    Eigen::MatrixXd o = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t blk = 0; blk < per_block_.size(); ++blk) {
      const auto& members = per_block_[blk];
      const Eigen::MatrixXd& x = x_[blk];
      const Eigen::MatrixXd& wb = w[blk];
      const auto n = x.rows();
      std::vector<char> dense(members.size(), 0);
      for (std::size_t u = 0; u < members.size(); ++u) {
        const auto& part = a_[members[u].first].parts[members[u].second];
        dense[u] = static_cast<Eigen::Index>(part.terms.size()) > 2 * n;
      }
      // Dense columns: G = X A_j W once, then <A_i, G> for every i.
      for (std::size_t v = 0; v < members.size(); ++v) {
        if (!dense[v]) continue;
        const auto& pj = a_[members[v].first].parts[members[v].second];
        Eigen::MatrixXd xa = Eigen::MatrixXd::Zero(n, n);
        for (const MatrixTerm& t : pj.terms) xa.col(t.col) += t.value * x.col(t.row);
        const Eigen::MatrixXd g = xa * wb;
        const auto j = static_cast<Eigen::Index>(members[v].first);
        for (std::size_t u = 0; u < members.size(); ++u) {
          if (dense[u] && u > v) continue;  // filled when u is the dense column
          const auto& pi = a_[members[u].first].parts[members[u].second];
          const auto i = static_cast<Eigen::Index>(members[u].first);
          const double val = inner(pi, g);
          o(i, j) += val;
          if (i != j) o(j, i) += val;
        }
      }
      // Sparse-sparse pairs.
      for (std::size_t u = 0; u < members.size(); ++u) {
        if (dense[u]) continue;
        const auto& pi = a_[members[u].first].parts[members[u].second];
        const auto i = static_cast<Eigen::Index>(members[u].first);
        for (std::size_t v = u; v < members.size(); ++v) {
          if (dense[v]) continue;
          const auto& pj = a_[members[v].first].parts[members[v].second];
          const auto j = static_cast<Eigen::Index>(members[v].first);
          double val = 0.0;
          for (const MatrixTerm& s : pi.terms) {
            for (const MatrixTerm& t : pj.terms) {
              val += s.value * t.value * x(s.col, t.row) * wb(t.col, s.row);
            }
          }
          o(i, j) += val;
          if (i != j) o(j, i) += val;
        }
      }
    }
    return o;
  }

  struct Direction {
    Blocks dx;
    Eigen::VectorXd dy;
    Blocks dz;
  };

  // Solves for the HKM direction targeting XZ = mu*I, with an optional
  // second-order correction term subtracted from the complementarity rhs.
  bool direction(const SchurSolver& schur_factor, const Blocks& w,
                 const Blocks& rd, double mu, const Blocks* correction, Direction& d) const {
    const std::size_t nb = x_.size();
    // K = mu W - X Rd W - correction W
    Blocks k(nb);
    for (std::size_t b = 0; b < nb; ++b) {
      k[b] = mu * w[b] - x_[b] * rd[b] * w[b];
      if (correction != nullptr) k[b] -= (*correction)[b] * w[b];
    }
    symmetrize(k);
    const Eigen::VectorXd rhs = apply_a(k) - b_;
    d.dy = schur_factor.solve(rhs);
    if (!d.dy.allFinite()) return false;
    d.dz = apply_at(d.dy);
    for (std::size_t b = 0; b < nb; ++b) d.dz[b] += rd[b];
    d.dx.resize(nb);
    for (std::size_t b = 0; b < nb; ++b) {
      d.dx[b] = mu * w[b] - x_[b] - x_[b] * d.dz[b] * w[b];
      if (correction != nullptr) d.dx[b] -= (*correction)[b] * w[b];
    }
    symmetrize(d.dx);
    return true;
  }

  bool step(const Blocks& rd) {
    const std::size_t nb = x_.size();
    std::vector<Eigen::LLT<Eigen::MatrixXd>> chol_x, chol_z;
    Blocks w(nb);
    for (std::size_t b = 0; b < nb; ++b) {
      chol_x.emplace_back(x_[b]);
      chol_z.emplace_back(z_[b]);
      if (chol_x.back().info() != Eigen::Success || chol_z.back().info() != Eigen::Success) {
        return false;
      }
      w[b] = chol_z.back().solve(Eigen::MatrixXd::Identity(x_[b].rows(), x_[b].cols()));
      w[b] = 0.5 * (w[b] + w[b].transpose()).eval();
    }
    const double mu = trace_product(x_, z_) / static_cast<double>(total_dim_);

    SchurSolver factor(schur(w));
    if (!factor.ok()) return false;

    // Predictor.
    Direction pred;
    if (!direction(factor, w, rd, 0.0, nullptr, pred)) return false;
    double ap = 1.0, ad = 1.0;
    for (std::size_t b = 0; b < nb; ++b) {
      ap = std::min(ap, opt_.step_fraction * max_step(chol_x[b], pred.dx[b]));
      ad = std::min(ad, opt_.step_fraction * max_step(chol_z[b], pred.dz[b]));
    }
    double mu_aff = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
      mu_aff += (x_[b] + ap * pred.dx[b]).cwiseProduct(z_[b] + ad * pred.dz[b]).sum();
    }
    mu_aff /= static_cast<double>(total_dim_);
    const double ratio = std::clamp(mu_aff / mu, 0.0, 1.0);
    const double sigma = ratio * ratio * ratio;

    // Corrector.
    Blocks second(nb);
    for (std::size_t b = 0; b < nb; ++b) second[b] = pred.dx[b] * pred.dz[b];
    Direction corr;
    if (!direction(factor, w, rd, sigma * mu, &second, corr)) return false;

    ap = 1.0;
    ad = 1.0;
    for (std::size_t b = 0; b < nb; ++b) {
      ap = std::min(ap, opt_.step_fraction * max_step(chol_x[b], corr.dx[b]));
      ad = std::min(ad, opt_.step_fraction * max_step(chol_z[b], corr.dz[b]));
    }
    for (std::size_t b = 0; b < nb; ++b) {
      x_[b] += ap * corr.dx[b];
      z_[b] += ad * corr.dz[b];
    }
    y_ += ad * corr.dy;
    return x_[0].allFinite() && y_.allFinite();
  }

  const SdpProblem& problem_;
  const SdpOptions& opt_;
  std::size_t m_;
  std::vector<SymMatrix> a_;
  SymMatrix c_;
  Blocks c_dense_;
  double c_norm_ = 0.0;
  Eigen::VectorXd b_;
  int total_dim_ = 0;
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> per_block_;
  Blocks x_, z_;
  Eigen::VectorXd y_;
};

}  // namespace

SdpSolution solve(const SdpProblem& problem, const SdpOptions& options) {
  problem.validate();
  InteriorPoint ipm(problem, options);
  return ipm.run();
}

}  // namespace dibell::sdp
