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

#include <numbers>
#include <random>

#include "dibell/facets.hpp"
#include "dibell/npa.hpp"
#include "dibell/separation.hpp"
#include "oracles.hpp"

using namespace dibell;

namespace {

// Word count at level 2 for two parties with n = m(k-1) projectors each:
// identity, letters, Alice-Bob pairs, same-party pairs on different settings.
std::size_t level2_words(int m, int k) {
  const int n = m * (k - 1);
  return static_cast<std::size_t>(1 + 2 * n + n * n + 2 * m * (m - 1) * (k - 1) * (k - 1));
}

// Operator of a word in a phi+ qubit realization (k = 2).
Eigen::Matrix4d word_operator(const Word& w, const std::vector<double>& ta,
                              const std::vector<double>& tb) {
  Eigen::Matrix2d a = Eigen::Matrix2d::Identity(), b = Eigen::Matrix2d::Identity();
  for (const auto& s : w.alice) a = a * oracle::projector(ta[static_cast<std::size_t>(s.setting)]);
  for (const auto& s : w.bob) b = b * oracle::projector(tb[static_cast<std::size_t>(s.setting)]);
  return oracle::kron(a, b);
}

}  // namespace

TEST_CASE("reduction rules") {
  Word w;
  const Symbol a0{0, 0, 0}, a1{0, 1, 0}, b0{1, 0, 0};
  REQUIRE(reduce({a0, a0}, w));
  CHECK(w.length() == 1);
  REQUIRE(reduce({b0, a0}, w));
  CHECK(w.alice.size() == 1);
  CHECK(w.bob.size() == 1);
  REQUIRE(reduce({a0, a1, a1, b0}, w));
  CHECK(w.alice == std::vector<Symbol>{a0, a1});
  // Orthogonal outcomes of one setting (k = 3).
  CHECK_FALSE(reduce({Symbol{0, 0, 0}, Symbol{0, 0, 1}}, w));
}

TEST_CASE("word and moment counts") {
  CHECK(MomentStructure(Scenario(2, 2), 1).size() == 5);
  CHECK(MomentStructure(Scenario(2, 2), 2).size() == level2_words(2, 2));
  CHECK(MomentStructure(Scenario(3, 2), 2).size() == level2_words(3, 2));
  CHECK(MomentStructure(Scenario(2, 3), 2).size() == level2_words(2, 3));
  CHECK(level2_words(2, 2) == 13);
  CHECK(level2_words(3, 2) == 28);
  CHECK_THROWS(MomentStructure(Scenario(2, 2), 3));
}

TEST_CASE("property: qubit realizations give consistent moment matrices") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, std::numbers::pi);
  for (int m : {2, 3}) {
    const MomentStructure ms(Scenario(m, 2), 2);
    for (int t = 0; t < 10; ++t) {
      std::vector<double> ta(static_cast<std::size_t>(m)), tb(static_cast<std::size_t>(m));
      for (auto& v : ta) v = u(rng);
      for (auto& v : tb) v = u(rng);
      const Eigen::Vector4d psi = oracle::phi_plus();
      const auto n = static_cast<Eigen::Index>(ms.size());
      Eigen::MatrixXd gamma(n, n);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
          gamma(i, j) = psi.dot(word_operator(ms.words()[static_cast<std::size_t>(i)], ta, tb).transpose() *
                                word_operator(ms.words()[static_cast<std::size_t>(j)], ta, tb) * psi);
      CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gamma).eigenvalues().minCoeff() > -1e-12);
      std::vector<double> value(ms.num_moments(), std::nan(""));
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) {
          const int id = ms.moment_id(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
          CHECK(id == ms.moment_id(static_cast<std::size_t>(j), static_cast<std::size_t>(i)));
          if (id == MomentStructure::kZeroMoment) {
            CHECK(std::abs(gamma(i, j)) < 1e-12);
            continue;
          }
          auto& v = value[static_cast<std::size_t>(id)];
          if (std::isnan(v)) v = gamma(i, j);
          CHECK(gamma(i, j) == doctest::Approx(v).epsilon(1e-12));
        }
      }
      CHECK(value[static_cast<std::size_t>(ms.identity_id())] == doctest::Approx(1.0));
      const auto born = oracle::qubit_behavior(ta, tb);
      for (int x = 1; x <= m; ++x)
        for (int y = 1; y <= m; ++y)
          for (int a = 1; a <= 2; ++a)
            for (int b = 1; b <= 2; ++b) {
              double p = 0.0;
              for (const auto& [id, c] : ms.probability(a, b, x, y)) p += c * value[static_cast<std::size_t>(id)];
              CHECK(p == doctest::Approx(born[oracle::pos(a, b, x, y, m, 2)]).epsilon(1e-12));
            }
    }
  }
}

TEST_CASE("CHSH guessing curve") {
  const Scenario s(2, 2);
  const MomentStructure ms(s, 2);
  const auto ch = canonical_chsh(s);
  for (double S : {2.0, 2.2, 2.4, 2.6, 2.8, 2.0 * std::numbers::sqrt2}) {
    const auto g = bound_guessing_probability((S - 2.0) / 4.0, ch, 1, ms);
    REQUIRE(g.ok());
    CHECK(g.p_guess == doctest::Approx(oracle::chsh_guessing(S)).epsilon(1e-3));
  }
  CHECK(bound_guessing_probability(0.0, ch, 1, ms).p_guess == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_FALSE(bound_guessing_probability(0.25, ch, 1, ms).ok());
}

TEST_CASE("property: guessing bound is monotone in the Bell value") {
  const Scenario s(2, 2);
  const MomentStructure ms(s, 2);
  const auto ch = canonical_chsh(s);
  double prev = 1.0 + 1e-9;
  for (double v = 0.0; v <= 0.2; v += 0.02) {
    const auto g = bound_guessing_probability(v, ch, 1, ms);
    REQUIRE(g.ok());
    CHECK(g.p_guess <= prev + 1e-6);
    CHECK(g.p_guess >= 0.5 - 1e-6);
    prev = g.p_guess;
  }
}

TEST_CASE("property: level 1 is looser than level 2") {
  const Scenario s(2, 2);
  const MomentStructure l1(s, 1), l2(s, 2);
  const auto ch = canonical_chsh(s);
  for (double v : {0.05, 0.1, 0.15}) {
    const auto g1 = bound_guessing_probability(v, ch, 1, l1);
    const auto g2 = bound_guessing_probability(v, ch, 1, l2);
    REQUIRE(g1.ok());
    REQUIRE(g2.ok());
    CHECK(g1.p_guess >= g2.p_guess - 1e-6);
  }
}

TEST_CASE("property: Bob relabelings leave the bound unchanged") {
  const Scenario s(2, 2);
  const MomentStructure ms(s, 2);
  const auto ch = canonical_chsh(s);
  const double base = bound_guessing_probability(0.12, ch, 1, ms).p_guess;
  const Relabeling flip_bob(s, false, {0, 1}, {1, 0}, {{0, 1}, {0, 1}}, {{1, 0}, {0, 1}});
  const auto g = bound_guessing_probability(0.12, flip_bob.apply(ch), 1, ms);
  REQUIRE(g.ok());
  CHECK(g.p_guess == doctest::Approx(base).epsilon(1e-5));
}

TEST_CASE("I3322 bound") {
  const MomentStructure ms(Scenario(3, 2), 2);
  const auto i = canonical_i3322();
  CHECK(bound_guessing_probability(i.c, i, 1, ms).p_guess == doctest::Approx(1.0).epsilon(1e-5));
  // below about 0.207 a deterministic x = 1 still fits
  CHECK(bound_guessing_probability(i.c + 0.15, i, 1, ms).p_guess == doctest::Approx(1.0).epsilon(1e-4));
  const auto g = bound_guessing_probability(i.c + 0.24, i, 1, ms);
  REQUIRE(g.ok());
  CHECK(g.p_guess < 1.0);
  CHECK(g.p_guess >= 0.5);
}

TEST_CASE("Q2 membership") {
  const Scenario s(2, 2);
  const MomentStructure ms(s, 2);
  CHECK_FALSE(q2_membership(Behavior(s, oracle::isotropic(1.0)), ms));
  CHECK(q2_membership(Behavior(s, oracle::isotropic(0.65)), ms));
  CHECK_FALSE(q2_membership(Behavior(s, oracle::isotropic(0.75)), ms));
  CHECK(q2_membership(Behavior(s, oracle::tsirelson()), ms));
  for (const auto& v : enumerate_vertices(s)) CHECK(q2_membership(v.behavior, ms));
  const auto r = q2_membership_check(uniform_behavior(s), ms);
  CHECK(r.member);
  CHECK(r.min_eigenvalue > 0.0);
}

TEST_CASE("property: random qubit behaviors are in Q2") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, std::numbers::pi);
  const MomentStructure ms(Scenario(3, 2), 2);
  for (int t = 0; t < 10; ++t) {
    const auto p = oracle::qubit_behavior({u(rng), u(rng), u(rng)}, {u(rng), u(rng), u(rng)});
    CHECK(q2_membership(Behavior(Scenario(3, 2), p), ms));
  }
}

TEST_CASE("guessing problem input checks") {
  const MomentStructure ms(Scenario(2, 2), 2);
  const auto ch = canonical_chsh(Scenario(2, 2));
  CHECK_THROWS(guessing_problem(0.1, ch, 3, ms));
  CHECK_THROWS(guessing_problem(0.1, canonical_i3322(), 1, ms));
}
