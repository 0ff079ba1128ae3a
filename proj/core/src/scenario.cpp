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

#include "dibell/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "dibell/error.hpp"

namespace dibell {

Scenario::Scenario(int m, int k) : m_(m), k_(k), dim_(0) {
  if (m < 2 || k < 2) {
    throw std::invalid_argument(
        fmt::format("scenario requires m >= 2 and k >= 2, got [{},{}]", m, k));
  }
  dim_ = static_cast<std::size_t>(m) * m * k * k;
}

std::uint64_t Scenario::vertex_count() const {
  std::uint64_t n = 1;
  for (int i = 0; i < 2 * m_; ++i) {
    if (n > kMaxVertices * static_cast<std::uint64_t>(k_)) return n * k_;
    n *= static_cast<std::uint64_t>(k_);
  }
  return n;
}

std::string Scenario::to_string() const { return fmt::format("[{},{}]", m_, k_); }

std::size_t idx(int a, int b, int x, int y, const Scenario& s) {
  const int m = s.m();
  const int k = s.k();
  if (a < 1 || a > k || b < 1 || b > k || x < 1 || x > m || y < 1 || y > m) {
    throw IndexError(fmt::format("coordinate (a={},b={},x={},y={}) outside {}",
                                 a, b, x, y, s.to_string()));
  }
  const auto kk = static_cast<std::size_t>(k) * k;
  return (static_cast<std::size_t>(x - 1) * m + (y - 1)) * kk +
         static_cast<std::size_t>(a - 1) * k + (b - 1);
}

Coordinate decode(std::size_t index, const Scenario& s) {
  if (index >= s.dim()) {
    throw IndexError(fmt::format("index {} outside {} (dim {})", index,
                                 s.to_string(), s.dim()));
  }
  const auto m = static_cast<std::size_t>(s.m());
  const auto k = static_cast<std::size_t>(s.k());
  const std::size_t block = index / (k * k);
  const std::size_t within = index % (k * k);
  return Coordinate{static_cast<int>(within / k) + 1,
                    static_cast<int>(within % k) + 1,
                    static_cast<int>(block / m) + 1,
                    static_cast<int>(block % m) + 1};
}

Behavior::Behavior(Scenario scenario, std::vector<double> p)
    : scenario_(scenario), p_(std::move(p)) {
  if (p_.size() != scenario_.dim()) {
    throw std::invalid_argument(
        fmt::format("behavior for {} needs {} entries, got {}",
                    scenario_.to_string(), scenario_.dim(), p_.size()));
  }
  for (std::size_t i = 0; i < p_.size(); ++i) {
    if (!std::isfinite(p_[i]) || p_[i] < -kTolPositivity) {
      throw InvariantError(
          fmt::format("behavior entry {} = {} violates positivity", i, p_[i]));
    }
  }
  const std::size_t kk = static_cast<std::size_t>(scenario_.k()) * scenario_.k();
  for (std::size_t block = 0; block < p_.size(); block += kk) {
    const double total = std::accumulate(p_.begin() + block,
                                         p_.begin() + block + kk, 0.0);
    if (std::abs(total - 1.0) > kTolNormalization) {
      throw InvariantError(fmt::format(
          "behavior block {} sums to {:.17g}, not 1", block / kk, total));
    }
  }
}

double Behavior::alice_marginal(int a, int x, int y) const {
  double sum = 0.0;
  for (int b = 1; b <= scenario_.k(); ++b) sum += (*this)(a, b, x, y);
  return sum;
}

double Behavior::bob_marginal(int b, int x, int y) const {
  double sum = 0.0;
  for (int a = 1; a <= scenario_.k(); ++a) sum += (*this)(a, b, x, y);
  return sum;
}

NoSignalingReport check_no_signaling(const Behavior& behavior, double tol) {
  const Scenario& s = behavior.scenario();
  double worst = 0.0;
  for (int x = 1; x <= s.m(); ++x) {
    for (int a = 1; a <= s.k(); ++a) {
      const double ref = behavior.alice_marginal(a, x, 1);
      for (int y = 2; y <= s.m(); ++y) {
        worst = std::max(worst, std::abs(behavior.alice_marginal(a, x, y) - ref));
      }
    }
  }
  for (int y = 1; y <= s.m(); ++y) {
    for (int b = 1; b <= s.k(); ++b) {
      const double ref = behavior.bob_marginal(b, 1, y);
      for (int x = 2; x <= s.m(); ++x) {
        worst = std::max(worst, std::abs(behavior.bob_marginal(b, x, y) - ref));
      }
    }
  }
  return {worst <= tol, worst};
}

Behavior uniform_behavior(const Scenario& s) {
  const double v = 1.0 / (static_cast<double>(s.k()) * s.k());
  return Behavior(s, std::vector<double>(s.dim(), v));
}

DeterministicVertex make_vertex(const Scenario& s, std::vector<int> alice_map,
                                std::vector<int> bob_map) {
  const auto m = static_cast<std::size_t>(s.m());
  if (alice_map.size() != m || bob_map.size() != m) {
    throw std::invalid_argument("vertex maps must have one entry per setting");
  }
  std::vector<double> p(s.dim(), 0.0);
  for (int x = 1; x <= s.m(); ++x) {
    for (int y = 1; y <= s.m(); ++y) {
      p[idx(alice_map[x - 1], bob_map[y - 1], x, y, s)] = 1.0;
    }
  }
  Behavior behavior(s, std::move(p));
  return {std::move(alice_map), std::move(bob_map), std::move(behavior)};
}

namespace {

// Advance a base-k odometer with 1-based digits; false when it wraps.
bool next_map(std::vector<int>& digits, int k) {
  for (std::size_t i = digits.size(); i-- > 0;) {
    if (digits[i] < k) {
      ++digits[i];
      return true;
    }
    digits[i] = 1;
  }
  return false;
}

}  // namespace

std::vector<DeterministicVertex> enumerate_vertices(const Scenario& s) {
  const std::uint64_t count = s.vertex_count();
  if (count > kMaxVertices) {
    throw CapacityError(fmt::format("{} has {} vertices, above the limit {}",
                                    s.to_string(), count, kMaxVertices));
  }
  std::vector<DeterministicVertex> out;
  out.reserve(count);
  std::vector<int> alice(s.m(), 1);
  do {
    std::vector<int> bob(s.m(), 1);
    do {
      out.push_back(make_vertex(s, alice, bob));
    } while (next_map(bob, s.k()));
  } while (next_map(alice, s.k()));
  return out;
}

double dot(std::span<const double> lhs, std::span<const double> rhs) {
  if (lhs.size() != rhs.size()) {
    throw std::invalid_argument("dot: length mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < lhs.size(); ++i) sum += lhs[i] * rhs[i];
  return sum;
}

}  // namespace dibell
