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

#include <functional>
#include <random>

#include "dibell/simplex.hpp"

using namespace dibell::lp;

namespace {

LinearProgram make(std::vector<double> c, std::vector<std::vector<double>> a, std::vector<double> b,
                   std::vector<RowSense> sense, std::vector<double> lo, std::vector<double> hi) {
  LinearProgram lp;
  lp.objective = std::move(c);
  lp.lower = std::move(lo);
  lp.upper = std::move(hi);
  lp.rows.resize(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(lp.objective.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) lp.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a[i][j];
  lp.rhs = std::move(b);
  lp.sense = std::move(sense);
  return lp;
}

// Best vertex of {A x <= b, lo <= x <= hi} by enumerating every choice of n
// active constraints.
double brute_force_max(const LinearProgram& lp) {
  const int n = static_cast<int>(lp.num_vars());
  const int m = static_cast<int>(lp.num_rows());
  std::vector<Eigen::VectorXd> normals;
  std::vector<double> rhs;
  for (int i = 0; i < m; ++i) {
    normals.push_back(lp.rows.row(i).transpose());
    rhs.push_back(lp.rhs[static_cast<std::size_t>(i)]);
  }
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e(j) = 1;
    normals.push_back(e);
    rhs.push_back(lp.upper[static_cast<std::size_t>(j)]);
    normals.push_back(-e);
    rhs.push_back(-lp.lower[static_cast<std::size_t>(j)]);
  }
  const int total = static_cast<int>(normals.size());
  double best = -1e300;
  std::vector<int> pick(static_cast<std::size_t>(n));
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == n) {
      Eigen::MatrixXd a(n, n);
      Eigen::VectorXd b(n);
      for (int i = 0; i < n; ++i) {
        a.row(i) = normals[static_cast<std::size_t>(pick[static_cast<std::size_t>(i)])].transpose();
        b(i) = rhs[static_cast<std::size_t>(pick[static_cast<std::size_t>(i)])];
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
      if (lu.rank() < n) return;
      const Eigen::VectorXd x = lu.solve(b);
      for (int i = 0; i < total; ++i)
        if (normals[static_cast<std::size_t>(i)].dot(x) > rhs[static_cast<std::size_t>(i)] + 1e-9) return;
      double v = 0;
      for (int j = 0; j < n; ++j) v += lp.objective[static_cast<std::size_t>(j)] * x(j);
      best = std::max(best, v);
      return;
    }
    for (int i = start; i < total; ++i) {
      pick[static_cast<std::size_t>(depth)] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

}  // namespace

TEST_CASE("textbook LP") {
  const auto lp = make({1, 1}, {{1, 2}, {3, 1}}, {4, 6},
                       {RowSense::less_equal, RowSense::less_equal}, {0, 0}, {kInfinity, kInfinity});
  const auto r = solve(lp);
  REQUIRE(r.status == SimplexStatus::optimal);
  CHECK(r.objective == doctest::Approx(14.0 / 5.0));
  CHECK(r.x[0] == doctest::Approx(8.0 / 5.0));
  CHECK(r.x[1] == doctest::Approx(6.0 / 5.0));
  CHECK(std::abs(r.duality_gap) < 1e-9);
}

TEST_CASE("bounds only") {
  const auto r = solve(make({1, -2}, {}, {}, {}, {-1, -3}, {3, 5}));
  REQUIRE(r.status == SimplexStatus::optimal);
  CHECK(r.objective == doctest::Approx(9.0));
}

TEST_CASE("equality rows and free variables") {
  // max x + y, x - y = 1, x + y <= 3, x,y free.
  const auto r = solve(make({1, 1}, {{1, -1}, {1, 1}}, {1, 3},
                            {RowSense::equal, RowSense::less_equal}, {-kInfinity, -kInfinity},
                            {kInfinity, kInfinity}));
  REQUIRE(r.status == SimplexStatus::optimal);
  CHECK(r.objective == doctest::Approx(3.0));
  CHECK(r.x[0] - r.x[1] == doctest::Approx(1.0));
}

TEST_CASE("greater-equal rows") {
  // max -x - y, x + y >= 2, x,y >= 0
  const auto r = solve(make({-1, -1}, {{1, 1}}, {2}, {RowSense::greater_equal}, {0, 0},
                            {kInfinity, kInfinity}));
  REQUIRE(r.status == SimplexStatus::optimal);
  CHECK(r.objective == doctest::Approx(-2.0));
}

TEST_CASE("infeasible and unbounded") {
  CHECK(solve(make({1}, {{1}, {1}}, {2, 1}, {RowSense::greater_equal, RowSense::less_equal}, {0},
                   {kInfinity}))
            .status == SimplexStatus::infeasible);
  CHECK(solve(make({1, 0}, {{0, 1}}, {1}, {RowSense::less_equal}, {0, 0}, {kInfinity, kInfinity}))
            .status == SimplexStatus::unbounded);
}

TEST_CASE("degenerate LP terminates") {
  // Many redundant constraints through the optimum.
  std::vector<std::vector<double>> a;
  std::vector<double> b;
  std::vector<RowSense> s;
  for (int i = 1; i <= 20; ++i) {
    a.push_back({1.0 * i, 1.0 * i, 1.0});
    b.push_back(2.0 * i);
    s.push_back(RowSense::less_equal);
  }
  const auto r = solve(make({1, 1, 0}, a, b, s, {0, 0, 0}, {kInfinity, kInfinity, 0}));
  REQUIRE(r.status == SimplexStatus::optimal);
  CHECK(r.objective == doctest::Approx(2.0));
}

TEST_CASE("property: random bounded LPs match brute force") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    const int n = 2 + static_cast<int>(rng() % 2);
    const int m = 1 + static_cast<int>(rng() % 4);
    std::vector<double> c(static_cast<std::size_t>(n));
    for (auto& v : c) v = u(rng);
    std::vector<std::vector<double>> a(static_cast<std::size_t>(m), std::vector<double>(static_cast<std::size_t>(n)));
    std::vector<double> b(static_cast<std::size_t>(m));
    for (auto& row : a)
      for (auto& v : row) v = u(rng);
    for (auto& v : b) v = 0.1 + std::abs(u(rng));  // x = 0 feasible
    const auto lp = make(c, a, b, std::vector<RowSense>(static_cast<std::size_t>(m), RowSense::less_equal),
                         std::vector<double>(static_cast<std::size_t>(n), -2.0),
                         std::vector<double>(static_cast<std::size_t>(n), 2.0));
    const auto r = solve(lp);
    REQUIRE(r.status == SimplexStatus::optimal);
    CHECK(r.objective == doctest::Approx(brute_force_max(lp)).epsilon(1e-9));
    CHECK(std::abs(r.duality_gap) < 1e-8);
    const Eigen::Map<const Eigen::VectorXd> x(r.x.data(), n);
    for (int i = 0; i < m; ++i) CHECK(lp.rows.row(i).dot(x) <= b[static_cast<std::size_t>(i)] + 1e-9);
  }
}
