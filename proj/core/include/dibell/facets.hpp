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
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dibell/scenario.hpp"

namespace dibell {

inline constexpr double kTolTight = 1e-9;

/// Σ h_abxy P(ab|xy) <= c, coefficients in idx order.
struct BellInequality {
  Scenario scenario;
  std::vector<double> h;
  double c = 0.0;

  double value(const Behavior& behavior) const;
};

/// Local relabeling symmetry of a scenario: optional party exchange after
/// per-party setting permutations and per-setting outcome permutations.
/// Permutations are stored 0-based: alice_settings[x-1] is the new x-1.
class Relabeling {
 public:
  Relabeling(Scenario scenario, bool swap_parties,
             std::vector<int> alice_settings, std::vector<int> bob_settings,
             std::vector<std::vector<int>> alice_outcomes,
             std::vector<std::vector<int>> bob_outcomes);

  static Relabeling identity(const Scenario& s);

  const Scenario& scenario() const { return scenario_; }

  Coordinate apply(const Coordinate& c) const;

  /// Image index of every coordinate index; a bijection of 0..dim-1.
  const std::vector<std::size_t>& permutation() const { return image_; }

  std::vector<double> apply(std::span<const double> v) const;
  Behavior apply(const Behavior& behavior) const;
  BellInequality apply(const BellInequality& ineq) const;

  /// `next` applied after `*this`.
  Relabeling then(const Relabeling& next) const;

 private:
  Scenario scenario_;
  bool swap_;
  std::vector<int> alice_settings_;
  std::vector<int> bob_settings_;
  std::vector<std::vector<int>> alice_outcomes_;
  std::vector<std::vector<int>> bob_outcomes_;
  std::vector<std::size_t> image_;
};

/// Every element of the relabeling group: 2·(m!)²·(k!)^(2m) of them.
std::vector<Relabeling> all_relabelings(const Scenario& s);

/// The local polytope of a scenario: its vertex list plus the linear
/// identities (normalization and no-signaling) that hold on its affine hull.
/// Shared read-only by the facet, separation and sampling code.
class LocalPolytope {
 public:
  explicit LocalPolytope(Scenario s);

  const Scenario& scenario() const { return scenario_; }
  const std::vector<DeterministicVertex>& vertices() const { return vertices_; }

  /// max_v h·v over all deterministic vertices.
  double classical_maximum(std::span<const double> h) const;

  /// Vertex values h·v, in vertex order.
  Eigen::VectorXd vertex_values(std::span<const double> h) const;

  bool is_tight(const BellInequality& ineq, double tol = kTolTight) const;

  /// Deterministic representative of an inequality modulo the affine-hull
  /// identities and positive scaling: h is projected onto the orthogonal
  /// complement of the identity normals, scaled to max|h_i| = 1, and c is
  /// recomputed as the classical maximum. Throws InvariantError if h lies
  /// entirely in the identity subspace.
  BellInequality canonicalize(std::span<const double> h) const;

  /// Indices (into vertices()) of the vertices with h·v = c within tol.
  std::vector<std::size_t> spanning_vertices(const BellInequality& ineq,
                                             double tol = kTolTight) const;

  /// Rows are the identity normals (one per normalization block and per
  /// independent no-signaling equation), right-hand sides in identity_rhs().
  const Eigen::MatrixXd& identity_normals() const { return normals_; }
  const Eigen::VectorXd& identity_rhs() const { return normals_rhs_; }

 private:
  Scenario scenario_;
  std::vector<DeterministicVertex> vertices_;
  Eigen::MatrixXd vertex_matrix_;  // one vertex per row
  Eigen::MatrixXd normals_;
  Eigen::VectorXd normals_rhs_;
  Eigen::MatrixXd projector_;
};

/// CH form of CHSH on settings {1,2}: -P(11|11) - P(12|11) - P(21|11)
/// + P(11|12) + P(11|21) - P(11|22) <= 0. Requires k = 2.
BellInequality canonical_chsh(const Scenario& s);

/// I3322 in joint-probability form for [3,2], bound 0.
BellInequality canonical_i3322();

/// Symmetry orbit of a tight inequality, as canonical forms, deduplicated
/// and sorted. Throws InvariantError if `canonical` is not tight.
std::vector<BellInequality> generate_facet_orbit(const BellInequality& canonical,
                                                 const LocalPolytope& polytope);

std::vector<DeterministicVertex> spanning_vertices(
    const BellInequality& ineq, const std::vector<DeterministicVertex>& vertices,
    double tol = kTolTight);

struct Facet {
  BellInequality inequality;
  std::string facet_class;  // "CHSH" or "I3322"
  std::size_t n_spanning = 0;
};

/// All facet Bell inequalities of [2,2] (8) or [3,2] (648), CHSH class
/// first. Throws UnsupportedError for other scenarios.
std::vector<Facet> facet_inequalities(const LocalPolytope& polytope);

/// Sortable key used for deduplication (coefficients on a 1e-7 grid).
std::vector<long long> canonical_key(const BellInequality& ineq);

}  // namespace dibell
