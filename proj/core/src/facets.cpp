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

#include "dibell/facets.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "dibell/error.hpp"

namespace dibell {

double BellInequality::value(const Behavior& behavior) const {
  if (!(behavior.scenario() == scenario)) {
    throw std::invalid_argument("inequality and behavior scenarios differ");
  }
  return dot(h, behavior.values());
}

// ---------------------------------------------------------------------------
// Relabeling

namespace {

bool is_permutation_of_range(const std::vector<int>& p, int n) {
  if (static_cast<int>(p.size()) != n) return false;
  std::vector<int> sorted = p;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < n; ++i) {
    if (sorted[i] != i) return false;
  }
  return true;
}

std::vector<int> iota_perm(int n) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  return p;
}

}  // namespace

Relabeling::Relabeling(Scenario scenario, bool swap_parties,
                       std::vector<int> alice_settings,
                       std::vector<int> bob_settings,
                       std::vector<std::vector<int>> alice_outcomes,
                       std::vector<std::vector<int>> bob_outcomes)
    : scenario_(scenario),
      swap_(swap_parties),
      alice_settings_(std::move(alice_settings)),
      bob_settings_(std::move(bob_settings)),
      alice_outcomes_(std::move(alice_outcomes)),
      bob_outcomes_(std::move(bob_outcomes)) {
  const int m = scenario_.m();
  const int k = scenario_.k();
  bool ok = is_permutation_of_range(alice_settings_, m) &&
            is_permutation_of_range(bob_settings_, m) &&
            static_cast<int>(alice_outcomes_.size()) == m &&
            static_cast<int>(bob_outcomes_.size()) == m;
  for (int i = 0; ok && i < m; ++i) {
    ok = is_permutation_of_range(alice_outcomes_[i], k) &&
         is_permutation_of_range(bob_outcomes_[i], k);
  }
  if (!ok) throw std::invalid_argument("malformed relabeling permutations");

  image_.resize(scenario_.dim());
  for (std::size_t i = 0; i < image_.size(); ++i) {
    const Coordinate c = apply(decode(i, scenario_));
    image_[i] = idx(c.a, c.b, c.x, c.y, scenario_);
  }
}

Relabeling Relabeling::identity(const Scenario& s) {
  return Relabeling(s, false, iota_perm(s.m()), iota_perm(s.m()),
                    std::vector<std::vector<int>>(s.m(), iota_perm(s.k())),
                    std::vector<std::vector<int>>(s.m(), iota_perm(s.k())));
}

Coordinate Relabeling::apply(const Coordinate& c) const {
  const int x = alice_settings_[c.x - 1] + 1;
  const int a = alice_outcomes_[c.x - 1][c.a - 1] + 1;
  const int y = bob_settings_[c.y - 1] + 1;
  const int b = bob_outcomes_[c.y - 1][c.b - 1] + 1;
  if (swap_) return {b, a, y, x};
  return {a, b, x, y};
}

std::vector<double> Relabeling::apply(std::span<const double> v) const {
  if (v.size() != image_.size()) {
    throw std::invalid_argument("relabeling: vector length mismatch");
  }
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[image_[i]] = v[i];
  return out;
}

Behavior Relabeling::apply(const Behavior& behavior) const {
  return Behavior(scenario_, apply(behavior.values()));
}

BellInequality Relabeling::apply(const BellInequality& ineq) const {
  return {ineq.scenario, apply(std::span<const double>(ineq.h)), ineq.c};
}

Relabeling Relabeling::then(const Relabeling& next) const {
  // Probe the composed map one party-input at a time; the other party's
  // coordinate is pinned to (1,1) and ignored.
  const int m = scenario_.m();
  const int k = scenario_.k();
  const bool swap = swap_ != next.swap_;
  std::vector<int> as(m), bs(m);
  std::vector<std::vector<int>> ao(m, std::vector<int>(k)),
      bo(m, std::vector<int>(k));
  for (int x = 1; x <= m; ++x) {
    for (int a = 1; a <= k; ++a) {
      const Coordinate img = next.apply(apply(Coordinate{a, 1, x, 1}));
      as[x - 1] = (swap ? img.y : img.x) - 1;
      ao[x - 1][a - 1] = (swap ? img.b : img.a) - 1;
    }
  }
  for (int y = 1; y <= m; ++y) {
    for (int b = 1; b <= k; ++b) {
      const Coordinate img = next.apply(apply(Coordinate{1, b, 1, y}));
      bs[y - 1] = (swap ? img.x : img.y) - 1;
      bo[y - 1][b - 1] = (swap ? img.a : img.b) - 1;
    }
  }
  return Relabeling(scenario_, swap, std::move(as), std::move(bs),
                    std::move(ao), std::move(bo));
}

namespace {

std::vector<std::vector<int>> all_permutations(int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> p = iota_perm(n);
  do {
    out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

// Cartesian power: every choice of one permutation per setting.
std::vector<std::vector<std::vector<int>>> outcome_choices(
    const std::vector<std::vector<int>>& perms, int m) {
  std::vector<std::vector<std::vector<int>>> out{{}};
  for (int i = 0; i < m; ++i) {
    std::vector<std::vector<std::vector<int>>> next;
    for (const auto& prefix : out) {
      for (const auto& p : perms) {
        auto extended = prefix;
        extended.push_back(p);
        next.push_back(std::move(extended));
      }
    }
    out = std::move(next);
  }
  return out;
}

}  // namespace

std::vector<Relabeling> all_relabelings(const Scenario& s) {
  const auto setting_perms = all_permutations(s.m());
  const auto outcome_sets = outcome_choices(all_permutations(s.k()), s.m());
  std::vector<Relabeling> out;
  out.reserve(2 * setting_perms.size() * setting_perms.size() *
              outcome_sets.size() * outcome_sets.size());
  for (bool swap : {false, true}) {
    for (const auto& as : setting_perms) {
      for (const auto& bs : setting_perms) {
        for (const auto& ao : outcome_sets) {
          for (const auto& bo : outcome_sets) {
            out.emplace_back(s, swap, as, bs, ao, bo);
          }
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// LocalPolytope

LocalPolytope::LocalPolytope(Scenario s)
    : scenario_(s), vertices_(enumerate_vertices(s)) {
  const auto dim = static_cast<Eigen::Index>(s.dim());
  vertex_matrix_.resize(static_cast<Eigen::Index>(vertices_.size()), dim);
  for (std::size_t v = 0; v < vertices_.size(); ++v) {
    const auto p = vertices_[v].behavior.values();
    for (Eigen::Index i = 0; i < dim; ++i) {
      vertex_matrix_(static_cast<Eigen::Index>(v), i) = p[i];
    }
  }

  const int m = s.m();
  const int k = s.k();
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> rhs;
  for (int x = 1; x <= m; ++x) {
    for (int y = 1; y <= m; ++y) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(dim);
      for (int a = 1; a <= k; ++a) {
        for (int b = 1; b <= k; ++b) row(idx(a, b, x, y, s)) = 1.0;
      }
      rows.push_back(std::move(row));
      rhs.push_back(1.0);
    }
  }
  for (int x = 1; x <= m; ++x) {
    for (int a = 1; a <= k; ++a) {
      for (int y = 2; y <= m; ++y) {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(dim);
        for (int b = 1; b <= k; ++b) {
          row(idx(a, b, x, y, s)) += 1.0;
          row(idx(a, b, x, 1, s)) -= 1.0;
        }
        rows.push_back(std::move(row));
        rhs.push_back(0.0);
      }
    }
  }
  for (int y = 1; y <= m; ++y) {
    for (int b = 1; b <= k; ++b) {
      for (int x = 2; x <= m; ++x) {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(dim);
        for (int a = 1; a <= k; ++a) {
          row(idx(a, b, x, y, s)) += 1.0;
          row(idx(a, b, 1, y, s)) -= 1.0;
        }
        rows.push_back(std::move(row));
        rhs.push_back(0.0);
      }
    }
  }
  normals_.resize(static_cast<Eigen::Index>(rows.size()), dim);
  normals_rhs_.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    normals_.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
    normals_rhs_(static_cast<Eigen::Index>(r)) = rhs[r];
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(normals_.transpose(), Eigen::ComputeThinU);
  const auto& sigma = svd.singularValues();
  const double cutoff = 1e-10 * sigma(0);
  Eigen::Index rank = 0;
  while (rank < sigma.size() && sigma(rank) > cutoff) ++rank;
  const Eigen::MatrixXd basis = svd.matrixU().leftCols(rank);
  projector_ = Eigen::MatrixXd::Identity(dim, dim) - basis * basis.transpose();
}

Eigen::VectorXd LocalPolytope::vertex_values(std::span<const double> h) const {
  if (h.size() != scenario_.dim()) {
    throw std::invalid_argument("coefficient vector length mismatch");
  }
  const Eigen::Map<const Eigen::VectorXd> hv(h.data(),
                                             static_cast<Eigen::Index>(h.size()));
  return vertex_matrix_ * hv;
}

double LocalPolytope::classical_maximum(std::span<const double> h) const {
  return vertex_values(h).maxCoeff();
}

bool LocalPolytope::is_tight(const BellInequality& ineq, double tol) const {
  return std::abs(classical_maximum(ineq.h) - ineq.c) <= tol;
}

BellInequality LocalPolytope::canonicalize(std::span<const double> h) const {
  if (h.size() != scenario_.dim()) {
    throw std::invalid_argument("coefficient vector length mismatch");
  }
  const Eigen::Map<const Eigen::VectorXd> hv(h.data(),
                                             static_cast<Eigen::Index>(h.size()));
  Eigen::VectorXd projected = projector_ * hv;
  const double scale = projected.cwiseAbs().maxCoeff();
  if (!(scale > 1e-12)) {
    throw InvariantError("inequality is constant on the local polytope");
  }
  projected /= scale;
  for (auto& v : projected) {
    if (std::abs(v) < 1e-14) v = 0.0;
  }
  BellInequality out{scenario_,
                     std::vector<double>(projected.begin(), projected.end()), 0.0};
  out.c = classical_maximum(out.h);
  return out;
}

std::vector<std::size_t> LocalPolytope::spanning_vertices(
    const BellInequality& ineq, double tol) const {
  const Eigen::VectorXd values = vertex_values(ineq.h);
  std::vector<std::size_t> out;
  for (Eigen::Index v = 0; v < values.size(); ++v) {
    if (std::abs(values(v) - ineq.c) <= tol) {
      out.push_back(static_cast<std::size_t>(v));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Canonical inequalities and orbits

BellInequality canonical_chsh(const Scenario& s) {
  if (s.k() != 2) {
    throw UnsupportedError(
        fmt::format("CHSH requires two outcomes, scenario is {}", s.to_string()));
  }
  BellInequality ineq{s, std::vector<double>(s.dim(), 0.0), 0.0};
  ineq.h[idx(1, 1, 1, 1, s)] = -1.0;
  ineq.h[idx(1, 2, 1, 1, s)] = -1.0;
  ineq.h[idx(2, 1, 1, 1, s)] = -1.0;
  ineq.h[idx(1, 1, 1, 2, s)] = 1.0;
  ineq.h[idx(1, 1, 2, 1, s)] = 1.0;
  ineq.h[idx(1, 1, 2, 2, s)] = -1.0;
  return ineq;
}

BellInequality canonical_i3322() {
  // Collins-Gisin table: correlator coefficients on P(11|xy), marginal
  // coefficients on P_A(1|x) and P_B(1|y). Marginals are written through the
  // setting pairs (x,1) for Alice and (1,y) for Bob.
  const Scenario s(3, 2);
  constexpr double corr[3][3] = {{1, 1, 1}, {1, 1, -1}, {1, -1, 0}};
  constexpr double alice_marg[3] = {-1, 0, 0};
  constexpr double bob_marg[3] = {-2, -1, 0};
  BellInequality ineq{s, std::vector<double>(s.dim(), 0.0), 0.0};
  for (int x = 1; x <= 3; ++x) {
    for (int y = 1; y <= 3; ++y) ineq.h[idx(1, 1, x, y, s)] += corr[x - 1][y - 1];
  }
  for (int x = 1; x <= 3; ++x) {
    for (int b = 1; b <= 2; ++b) ineq.h[idx(1, b, x, 1, s)] += alice_marg[x - 1];
  }
  for (int y = 1; y <= 3; ++y) {
    for (int a = 1; a <= 2; ++a) ineq.h[idx(a, 1, 1, y, s)] += bob_marg[y - 1];
  }
  return ineq;
}

std::vector<long long> canonical_key(const BellInequality& ineq) {
  std::vector<long long> key;
  key.reserve(ineq.h.size() + 1);
  for (double v : ineq.h) key.push_back(std::llround(v * 1e7));
  key.push_back(std::llround(ineq.c * 1e7));
  return key;
}

std::vector<BellInequality> generate_facet_orbit(const BellInequality& canonical,
                                                 const LocalPolytope& polytope) {
  if (!(canonical.scenario == polytope.scenario())) {
    throw std::invalid_argument("inequality and polytope scenarios differ");
  }
  if (!polytope.is_tight(canonical)) {
    throw InvariantError(fmt::format(
        "inequality is not tight: bound {} but classical maximum {}", canonical.c,
        polytope.classical_maximum(canonical.h)));
  }
  std::map<std::vector<long long>, BellInequality> orbit;
  for (const Relabeling& g : all_relabelings(polytope.scenario())) {
    const std::vector<double> image = g.apply(std::span<const double>(canonical.h));
    BellInequality member = polytope.canonicalize(image);
    auto key = canonical_key(member);
    orbit.try_emplace(std::move(key), std::move(member));
  }
  std::vector<BellInequality> out;
  out.reserve(orbit.size());
  for (auto& [key, ineq] : orbit) out.push_back(std::move(ineq));
  return out;
}

std::vector<DeterministicVertex> spanning_vertices(
    const BellInequality& ineq, const std::vector<DeterministicVertex>& vertices,
    double tol) {
  std::vector<DeterministicVertex> out;
  for (const auto& v : vertices) {
    if (std::abs(ineq.value(v.behavior) - ineq.c) <= tol) out.push_back(v);
  }
  return out;
}

std::vector<Facet> facet_inequalities(const LocalPolytope& polytope) {
  const Scenario& s = polytope.scenario();
  if (s.k() != 2 || (s.m() != 2 && s.m() != 3)) {
    throw UnsupportedError(fmt::format(
        "facet list is available for [2,2] and [3,2] only, not {}", s.to_string()));
  }
  std::vector<Facet> out;
  auto add_class = [&](const BellInequality& seed, const char* name) {
    for (auto& ineq : generate_facet_orbit(seed, polytope)) {
      const std::size_t n = polytope.spanning_vertices(ineq).size();
      out.push_back({std::move(ineq), name, n});
    }
  };
  add_class(canonical_chsh(s), "CHSH");
  if (s.m() == 3) add_class(canonical_i3322(), "I3322");
  return out;
}

}  // namespace dibell
