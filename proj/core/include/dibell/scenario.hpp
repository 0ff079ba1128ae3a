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
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dibell {

inline constexpr double kTolPositivity = 1e-12;
inline constexpr double kTolNormalization = 1e-9;
inline constexpr double kTolNoSignaling = 1e-9;
inline constexpr std::uint64_t kMaxVertices = 10'000'000;

/// A bipartite [m,k] Bell scenario: m settings per party, k outcomes each.
class Scenario {
 public:
  Scenario(int m, int k);

  int m() const { return m_; }
  int k() const { return k_; }

  /// Length m²k² of a behavior vector.
  std::size_t dim() const { return dim_; }

  /// k^(2m), the number of deterministic local strategies.
  std::uint64_t vertex_count() const;

  std::string to_string() const;

  friend bool operator==(const Scenario&, const Scenario&) = default;

 private:
  int m_;
  int k_;
  std::size_t dim_;
};

/// 1-based (a,b,x,y) label of a behavior coordinate.
struct Coordinate {
  int a;
  int b;
  int x;
  int y;
  friend bool operator==(const Coordinate&, const Coordinate&) = default;
};

/// Flat index of P(ab|xy): ((x-1)m + (y-1))k² + (a-1)k + (b-1).
/// Throws IndexError for out-of-range labels.
std::size_t idx(int a, int b, int x, int y, const Scenario& s);

/// Inverse of idx.
Coordinate decode(std::size_t index, const Scenario& s);

/// Joint conditional probabilities P(ab|xy) stored in idx order.
///
/// Construction validates positivity (every entry >= -1e-12) and
/// per-(x,y) normalization (within 1e-9). No-signaling is a separate check
/// because sampled and solver-produced behaviors only satisfy it
/// approximately.
class Behavior {
 public:
  Behavior(Scenario scenario, std::vector<double> p);

  const Scenario& scenario() const { return scenario_; }
  std::span<const double> values() const { return p_; }
  const std::vector<double>& vector() const { return p_; }

  double operator()(int a, int b, int x, int y) const {
    return p_[idx(a, b, x, y, scenario_)];
  }

  /// Σ_b P(ab|xy)
  double alice_marginal(int a, int x, int y) const;
  /// Σ_a P(ab|xy)
  double bob_marginal(int b, int x, int y) const;

 private:
  Scenario scenario_;
  std::vector<double> p_;
};

struct NoSignalingReport {
  bool ok;
  double max_residual;
};

/// Largest deviation between marginals computed from different settings
/// of the other party; ok iff it is <= tol.
NoSignalingReport check_no_signaling(const Behavior& behavior,
                                     double tol = kTolNoSignaling);

/// P(ab|xy) = 1/k² everywhere.
Behavior uniform_behavior(const Scenario& s);

struct DeterministicVertex {
  std::vector<int> alice_map;  // x -> a, 1-based values
  std::vector<int> bob_map;    // y -> b
  Behavior behavior;
};

DeterministicVertex make_vertex(const Scenario& s, std::vector<int> alice_map,
                                std::vector<int> bob_map);

/// All k^(2m) deterministic strategies, lexicographic in alice_map then
/// bob_map (last setting varies fastest). Throws CapacityError above 1e7.
std::vector<DeterministicVertex> enumerate_vertices(const Scenario& s);

double dot(std::span<const double> lhs, std::span<const double> rhs);

}  // namespace dibell
