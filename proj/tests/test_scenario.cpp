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

#include <random>

#include "dibell/error.hpp"
#include "dibell/scenario.hpp"
#include "oracles.hpp"

using namespace dibell;

TEST_CASE("idx layout") {
  const Scenario s(2, 2);
  CHECK(idx(1, 1, 1, 1, s) == 0);
  CHECK(idx(2, 1, 1, 1, s) == 2);
  CHECK(idx(1, 1, 1, 2, s) == 4);
  CHECK(idx(2, 2, 2, 2, s) == 15);
  CHECK_THROWS_AS(idx(3, 1, 1, 1, s), IndexError);
  CHECK_THROWS_AS(idx(1, 1, 0, 1, s), IndexError);
  CHECK_THROWS_AS(decode(16, s), IndexError);
}

TEST_CASE("decode inverts idx") {
  for (auto [m, k] : {std::pair{2, 2}, {3, 2}, {2, 3}, {4, 3}}) {
    const Scenario s(m, k);
    CHECK(s.dim() == static_cast<std::size_t>(m * m * k * k));
    for (std::size_t i = 0; i < s.dim(); ++i) {
      const Coordinate c = decode(i, s);
      CHECK(idx(c.a, c.b, c.x, c.y, s) == i);
      CHECK(oracle::pos(c.a, c.b, c.x, c.y, m, k) == i);
    }
  }
}

TEST_CASE("scenario validation") {
  CHECK_THROWS(Scenario(1, 2));
  CHECK_THROWS(Scenario(2, 1));
  CHECK(Scenario(3, 2).vertex_count() == 64);
  CHECK(Scenario(2, 3).vertex_count() == 81);
}

TEST_CASE("behavior validation") {
  const Scenario s(2, 2);
  std::vector<double> p(16, 0.25);
  CHECK_NOTHROW(Behavior(s, p));
  CHECK_THROWS(Behavior(s, std::vector<double>(15, 0.25)));
  p[0] = -0.01;
  p[1] = 0.26;
  CHECK_THROWS_AS(Behavior(s, p), InvariantError);
  p[0] = 0.3;
  p[1] = 0.25;
  CHECK_THROWS_AS(Behavior(s, p), InvariantError);
  p[0] = 0.25 + 1e-10;  // inside the normalization tolerance
  CHECK_NOTHROW(Behavior(s, p));
}

TEST_CASE("signaling behavior is detected") {
  // P(11|11) = 1 and P(22|12) = 1: Alice's x=1 marginal depends on y.
  const Scenario s(2, 2);
  std::vector<double> p(16, 0.0);
  p[idx(1, 1, 1, 1, s)] = 1.0;
  p[idx(2, 2, 1, 2, s)] = 1.0;
  p[idx(1, 1, 2, 1, s)] = 1.0;
  p[idx(1, 1, 2, 2, s)] = 1.0;
  const auto r = check_no_signaling(Behavior(s, p));
  CHECK_FALSE(r.ok);
  CHECK(r.max_residual == doctest::Approx(1.0));
}

TEST_CASE("vertices match brute force") {
  for (auto [m, k] : {std::pair{2, 2}, {3, 2}, {2, 3}}) {
    const Scenario s(m, k);
    const auto vs = enumerate_vertices(s);
    const auto ref = oracle::vertices(m, k);
    REQUIRE(vs.size() == ref.size());
    std::vector<std::vector<double>> got;
    for (const auto& v : vs) got.push_back(v.behavior.vector());
    std::sort(got.begin(), got.end());
    auto want = ref;
    std::sort(want.begin(), want.end());
    CHECK(got == want);
  }
}

TEST_CASE("property: vertices and mixtures are no-signaling") {
  const Scenario s(3, 2);
  const auto vs = enumerate_vertices(s);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> w(vs.size());
    double total = 0.0;
    for (auto& x : w) total += (x = u(rng));
    std::vector<double> p(s.dim(), 0.0);
    for (std::size_t i = 0; i < vs.size(); ++i)
      for (std::size_t j = 0; j < s.dim(); ++j) p[j] += w[i] / total * vs[i].behavior.vector()[j];
    const Behavior b(s, p);
    CHECK(check_no_signaling(b).ok);
    for (int x = 1; x <= 3; ++x)
      CHECK(b.alice_marginal(1, x, 1) == doctest::Approx(b.alice_marginal(1, x, 3)).epsilon(1e-12));
  }
}

TEST_CASE("uniform behavior") {
  const auto u = uniform_behavior(Scenario(2, 3));
  for (double v : u.values()) CHECK(v == doctest::Approx(1.0 / 9.0));
  CHECK(check_no_signaling(u).ok);
}

TEST_CASE("dot") {
  const std::vector<double> a{1, 2, 3}, b{4, 5, 6};
  CHECK(dot(a, b) == 32.0);
  CHECK_THROWS(dot(a, std::vector<double>{1.0}));
}
