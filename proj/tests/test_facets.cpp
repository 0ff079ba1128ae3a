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

#include <doctest.h>

#include <map>
#include <random>
#include <set>

#include "dibell/facets.hpp"
#include "dibell/separation.hpp"
#include "oracles.hpp"

using namespace dibell;

namespace {

// Affine rank of a point set.
long affine_rank(const std::vector<std::vector<double>>& pts) {
  if (pts.size() < 2) return 0;
  Eigen::MatrixXd d(static_cast<Eigen::Index>(pts.size() - 1), static_cast<Eigen::Index>(pts[0].size()));
  for (std::size_t i = 1; i < pts.size(); ++i)
    for (std::size_t j = 0; j < pts[0].size(); ++j) d(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(j)) = pts[i][j] - pts[0][j];
  Eigen::FullPivLU<Eigen::MatrixXd> lu(d);
  lu.setThreshold(1e-9);
  return lu.rank();
}

// Dimension of the local polytope: (m(k-1)+1)^2 - 1.
long polytope_dim(int m, int k) { return (m * (k - 1) + 1) * (m * (k - 1) + 1) - 1; }

}  // namespace

TEST_CASE("relabeling group size") {
  CHECK(all_relabelings(Scenario(2, 2)).size() == 2 * 4 * 16);
}

TEST_CASE("property: relabelings permute the vertex set") {
  const Scenario s(3, 2);
  const auto vs = enumerate_vertices(s);
  std::set<std::vector<double>> set;
  for (const auto& v : vs) set.insert(v.behavior.vector());
  const auto group = all_relabelings(s);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 40; ++t) {
    const auto& g = group[rng() % group.size()];
    auto perm = g.permutation();
    std::sort(perm.begin(), perm.end());
    for (std::size_t i = 0; i < perm.size(); ++i) REQUIRE(perm[i] == i);
    for (const auto& v : vs) CHECK(set.count(g.apply(v.behavior).vector()) == 1);
  }
}

TEST_CASE("[2,2] facets") {
  const LocalPolytope poly(Scenario(2, 2));
  CHECK(poly.vertices().size() == 16);
  const auto facets = facet_inequalities(poly);
  CHECK(facets.size() == 8);
  const auto verts = oracle::vertices(2, 2);
  for (const auto& f : facets) {
    CHECK(f.facet_class == "CHSH");
    CHECK(f.n_spanning == 8);
    std::vector<std::vector<double>> tight;
    for (const auto& v : verts) {
      const double val = dot(f.inequality.h, v);
      CHECK(val <= f.inequality.c + 1e-9);
      if (val >= f.inequality.c - 1e-9) tight.push_back(v);
    }
    CHECK(tight.size() == 8);
    CHECK(affine_rank(tight) == polytope_dim(2, 2) - 1);
  }
}

TEST_CASE("[3,2] facets") {
  const LocalPolytope poly(Scenario(3, 2));
  CHECK(poly.vertices().size() == 64);
  const auto facets = facet_inequalities(poly);
  CHECK(facets.size() == 648);
  std::map<std::string, int> classes;
  std::set<std::vector<long long>> keys;
  const auto verts = oracle::vertices(3, 2);
  for (const auto& f : facets) {
    ++classes[f.facet_class];
    keys.insert(canonical_key(f.inequality));
    CHECK(f.n_spanning == (f.facet_class == "CHSH" ? 32u : 20u));
  }
  CHECK(classes.size() == 2);
  CHECK(classes["CHSH"] == 72);
  CHECK(classes["I3322"] == 576);
  CHECK(keys.size() == 648);
  // Facet dimension check on a sample of each class.
  for (std::size_t i : {0ul, 71ul, 72ul, 647ul}) {
    std::vector<std::vector<double>> tight;
    for (const auto& v : verts) {
      const double val = dot(facets[i].inequality.h, v);
      REQUIRE(val <= facets[i].inequality.c + 1e-9);
      if (val >= facets[i].inequality.c - 1e-9) tight.push_back(v);
    }
    CHECK(affine_rank(tight) == polytope_dim(3, 2) - 1);
  }
}

TEST_CASE("canonical CH and I3322") {
  const Scenario s(2, 2);
  const auto ch = canonical_chsh(s);
  CHECK(ch.c == 0.0);
  CHECK(ch.value(Behavior(s, oracle::isotropic(1.0))) == doctest::Approx(0.5));
  CHECK(ch.value(Behavior(s, oracle::tsirelson())) == doctest::Approx((std::sqrt(2.0) - 1.0) / 2.0));
  const LocalPolytope poly(s);
  CHECK(poly.is_tight(ch));
  CHECK(spanning_vertices(ch, poly.vertices()).size() == 8);

  const LocalPolytope p32(Scenario(3, 2));
  const auto i3322 = canonical_i3322();
  CHECK(p32.is_tight(i3322));
  CHECK(spanning_vertices(i3322, p32.vertices()).size() == 20);
  CHECK(p32.classical_maximum(i3322.h) == doctest::Approx(i3322.c));
}

TEST_CASE("property: canonical form is invariant under identities and scaling") {
  const LocalPolytope poly(Scenario(2, 2));
  const auto ch = canonical_chsh(Scenario(2, 2));
  const auto base = poly.canonicalize(ch.h);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 30; ++t) {
    std::vector<double> h = ch.h;
    const double scale = 0.1 + std::abs(u(rng)) * 5.0;
    for (auto& v : h) v *= scale;
    // Add multiples of the normalization and no-signaling normals.
    const auto& n = poly.identity_normals();
    for (Eigen::Index r = 0; r < n.rows(); ++r) {
      const double w = u(rng);
      for (std::size_t j = 0; j < h.size(); ++j) h[j] += w * n(r, static_cast<Eigen::Index>(j));
    }
    const auto c = poly.canonicalize(h);
    CHECK(canonical_key(c) == canonical_key(base));
    double mx = 0.0;
    for (double v : c.h) mx = std::max(mx, std::abs(v));
    CHECK(mx == doctest::Approx(1.0));
  }
}

TEST_CASE("orbit of CH covers all [2,2] facets") {
  const LocalPolytope poly(Scenario(2, 2));
  CHECK(generate_facet_orbit(canonical_chsh(Scenario(2, 2)), poly).size() == 8);
  BellInequality loose{Scenario(2, 2), canonical_chsh(Scenario(2, 2)).h, 1.0};
  CHECK_THROWS(generate_facet_orbit(loose, poly));
}

TEST_CASE("facets reject unsupported scenarios") {
  CHECK_THROWS(facet_inequalities(LocalPolytope(Scenario(2, 3))));
}
