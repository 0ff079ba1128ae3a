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

#include "dibell/npa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>

#include <fmt/format.h>

#include "dibell/error.hpp"

namespace dibell {
namespace {

// Stack reduction of one party's projector string. A string of the same
// party only simplifies at adjacent positions with the same setting.
bool reduce_party(const std::vector<Symbol>& in, std::vector<Symbol>& out) {
  out.clear();
  for (const Symbol& s : in) {
    if (!out.empty() && out.back().setting == s.setting) {
      if (out.back().outcome != s.outcome) return false;
      continue;
    }
    out.push_back(s);
  }
  return true;
}

Word adjoint(const Word& w) {
  Word r{{w.alice.rbegin(), w.alice.rend()}, {w.bob.rbegin(), w.bob.rend()}};
  return r;
}

Word canonical_moment(const Word& w) {
  Word adj = adjoint(w);
  return adj < w ? adj : w;
}

std::vector<Symbol> flatten(const Word& w) {
  std::vector<Symbol> seq = w.alice;
  seq.insert(seq.end(), w.bob.begin(), w.bob.end());
  return seq;
}

bool word_order(const Word& lhs, const Word& rhs) {
  if (lhs.length() != rhs.length()) return lhs.length() < rhs.length();
  return flatten(lhs) < flatten(rhs);
}

// Sums duplicate coordinates so the solver sees one coefficient per entry.
sdp::LinearFunctional merged(sdp::LinearFunctional f) {
  std::sort(f.begin(), f.end(), [](const sdp::Entry& a, const sdp::Entry& b) {
    return std::tie(a.block, a.row, a.col) < std::tie(b.block, b.row, b.col);
  });
  sdp::LinearFunctional out;
  for (const sdp::Entry& e : f) {
    if (!out.empty() && out.back().block == e.block && out.back().row == e.row &&
        out.back().col == e.col) {
      out.back().value += e.value;
    } else {
      out.push_back(e);
    }
  }
  std::erase_if(out, [](const sdp::Entry& e) { return e.value == 0.0; });
  return out;
}

}  // namespace

std::string Word::to_string() const {
  if (is_identity()) return "1";
  std::string s;
  for (const Symbol& a : alice) s += fmt::format("A({}|{})", a.outcome + 1, a.setting + 1);
  for (const Symbol& b : bob) s += fmt::format("B({}|{})", b.outcome + 1, b.setting + 1);
  return s;
}

bool reduce(const std::vector<Symbol>& sequence, Word& out) {
  std::vector<Symbol> a;
  std::vector<Symbol> b;
  for (const Symbol& s : sequence) (s.party == 0 ? a : b).push_back(s);
  return reduce_party(a, out.alice) && reduce_party(b, out.bob);
}

MomentStructure::MomentStructure(Scenario scenario, int level)
    : scenario_(std::move(scenario)), level_(level) {
  if (level != 1 && level != 2) {
    throw std::invalid_argument(fmt::format("NPA level {} is not supported (1 or 2)", level));
  }
  const int m = scenario_.m();
  const int k = scenario_.k();

  std::vector<Symbol> letters;
  for (int party = 0; party < 2; ++party) {
    for (int x = 0; x < m; ++x) {
      for (int a = 0; a < k - 1; ++a) letters.push_back({party, x, a});
    }
  }
  words_.push_back(Word{});
  for (const Symbol& s : letters) {
    Word w;
    reduce({s}, w);
    words_.push_back(w);
  }
  if (level == 2) {
    std::vector<Word> pairs;
    for (const Symbol& s : letters) {
      for (const Symbol& t : letters) {
        Word w;
        if (reduce({s, t}, w) && w.length() == 2) pairs.push_back(w);
      }
    }
    std::sort(pairs.begin(), pairs.end(), word_order);
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    words_.insert(words_.end(), pairs.begin(), pairs.end());
  }

  const std::size_t n = words_.size();
  ids_.assign(n * n, kZeroMoment);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      std::vector<Symbol> seq;
      for (auto it = words_[i].alice.rbegin(); it != words_[i].alice.rend(); ++it) {
        seq.push_back(*it);
      }
      seq.insert(seq.end(), words_[j].alice.begin(), words_[j].alice.end());
      for (auto it = words_[i].bob.rbegin(); it != words_[i].bob.rend(); ++it) {
        seq.push_back(*it);
      }
      seq.insert(seq.end(), words_[j].bob.begin(), words_[j].bob.end());
      Word w;
      int id = kZeroMoment;
      if (reduce(seq, w)) {
        const Word key = canonical_moment(w);
        auto [it, inserted] = lookup_.try_emplace(key, static_cast<int>(moments_.size()));
        if (inserted) {
          moments_.push_back(key);
          entries_.emplace_back();
        }
        id = it->second;
        entries_[static_cast<std::size_t>(id)].emplace_back(static_cast<int>(i),
                                                            static_cast<int>(j));
      } else {
        zero_entries_.emplace_back(static_cast<int>(i), static_cast<int>(j));
      }
      ids_[i * n + j] = id;
      ids_[j * n + i] = id;
    }
  }
}

int MomentStructure::find(const std::vector<Symbol>& sequence) const {
  Word w;
  if (!reduce(sequence, w)) return kZeroMoment;
  auto it = lookup_.find(canonical_moment(w));
  if (it == lookup_.end()) {
    throw std::out_of_range(
        fmt::format("moment {} is not in the level-{} matrix", w.to_string(), level_));
  }
  return it->second;
}

namespace {
void check_label(int label, int bound, const char* what) {
  if (label < 1 || label > bound) {
    throw IndexError(fmt::format("{} {} out of range 1..{}", what, label, bound));
  }
}
}  // namespace

int MomentStructure::alice_id(int a, int x) const {
  check_label(a, scenario_.k() - 1, "outcome");
  check_label(x, scenario_.m(), "setting");
  return find({{0, x - 1, a - 1}});
}

int MomentStructure::bob_id(int b, int y) const {
  check_label(b, scenario_.k() - 1, "outcome");
  check_label(y, scenario_.m(), "setting");
  return find({{1, y - 1, b - 1}});
}

int MomentStructure::joint_id(int a, int b, int x, int y) const {
  check_label(a, scenario_.k() - 1, "outcome");
  check_label(b, scenario_.k() - 1, "outcome");
  check_label(x, scenario_.m(), "setting");
  check_label(y, scenario_.m(), "setting");
  return find({{0, x - 1, a - 1}, {1, y - 1, b - 1}});
}

std::map<int, double> MomentStructure::probability(int a, int b, int x, int y) const {
  const int k = scenario_.k();
  check_label(a, k, "outcome");
  check_label(b, k, "outcome");
  std::map<int, double> f;
  if (a < k && b < k) {
    f[joint_id(a, b, x, y)] += 1.0;
  } else if (a < k) {
    f[alice_id(a, x)] += 1.0;
    for (int b2 = 1; b2 < k; ++b2) f[joint_id(a, b2, x, y)] -= 1.0;
  } else if (b < k) {
    f[bob_id(b, y)] += 1.0;
    for (int a2 = 1; a2 < k; ++a2) f[joint_id(a2, b, x, y)] -= 1.0;
  } else {
    f[identity_id()] += 1.0;
    for (int a2 = 1; a2 < k; ++a2) f[alice_id(a2, x)] -= 1.0;
    for (int b2 = 1; b2 < k; ++b2) f[bob_id(b2, y)] -= 1.0;
    for (int a2 = 1; a2 < k; ++a2) {
      for (int b2 = 1; b2 < k; ++b2) f[joint_id(a2, b2, x, y)] += 1.0;
    }
  }
  return f;
}

std::map<int, double> MomentStructure::bell_functional(std::span<const double> h) const {
  if (h.size() != scenario_.dim()) {
    throw std::invalid_argument(
        fmt::format("coefficient vector has length {}, expected {}", h.size(), scenario_.dim()));
  }
  std::map<int, double> f;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (h[i] == 0.0) continue;
    const Coordinate c = decode(i, scenario_);
    for (const auto& [id, coef] : probability(c.a, c.b, c.x, c.y)) f[id] += h[i] * coef;
  }
  std::erase_if(f, [](const auto& kv) { return kv.second == 0.0; });
  return f;
}

MomentStructure build_moment_structure(const Scenario& scenario, int level) {
  return MomentStructure(scenario, level);
}

namespace {

// Affine expression in the free moment variables.
struct Affine {
  double constant = 0.0;
  std::map<int, double> terms;
};

void add_scaled(Affine& dst, const Affine& src, double scale) {
  dst.constant += scale * src.constant;
  for (const auto& [u, c] : src.terms) dst.terms[u] += scale * c;
}

}  // namespace

GuessingProgram guessing_problem(double bell_value, const BellInequality& ineq,
                                 int guessed_setting, const MomentStructure& structure) {
  const Scenario& s = structure.scenario();
  if (!(ineq.scenario == s)) {
    throw std::invalid_argument(fmt::format("inequality is {} but moment structure is {}",
                                            ineq.scenario.to_string(), s.to_string()));
  }
  check_label(guessed_setting, s.m(), "guessed setting");
  if (!std::isfinite(bell_value)) throw std::invalid_argument("bell value is not finite");

  const int k = s.k();
  const int nm = static_cast<int>(structure.num_moments());
  const int id0 = structure.identity_id();
  auto var = [nm](int e, int j) { return static_cast<std::size_t>(e * nm + j); };

  const auto bell = structure.bell_functional(ineq.h);
  int pivot = -1;
  double pivot_coef = 0.0;
  for (const auto& [id, coef] : bell) {
    if (id != id0 && std::abs(coef) > std::abs(pivot_coef)) {
      pivot = id;
      pivot_coef = coef;
    }
  }
  if (pivot < 0) {
    throw std::invalid_argument("Bell expression is constant on normalized behaviors");
  }

  // Moment variables y(e, j) of block e. y(k-1, identity) and y(k-1, pivot)
  // are eliminated through the two equality constraints; the rest are free.
  std::vector<Affine> y(static_cast<std::size_t>(k * nm));
  int num_free = 0;
  for (int e = 0; e < k; ++e) {
    for (int j = 0; j < nm; ++j) {
      if (e == k - 1 && (j == id0 || j == pivot)) continue;
      y[var(e, j)].terms[num_free++] = 1.0;
    }
  }
  Affine& weight = y[var(k - 1, id0)];  // Σ_e y(e, 1) = 1
  weight.constant = 1.0;
  for (int e = 0; e < k - 1; ++e) add_scaled(weight, y[var(e, id0)], -1.0);
  Affine& pv = y[var(k - 1, pivot)];  // Σ_e bell(y_e) = value
  pv.constant = bell_value / pivot_coef;
  for (int e = 0; e < k; ++e) {
    for (const auto& [id, coef] : bell) {
      if (e == k - 1 && id == pivot) continue;
      add_scaled(pv, y[var(e, id)], -coef / pivot_coef);
    }
  }

  // Γ_e = Σ_j y(e, j) F_j ⪰ 0 is the dual constraint Σ_u z_u A_u - C ⪰ 0.
  GuessingProgram out;
  sdp::SdpProblem& p = out.sdp;
  for (int e = 0; e < k; ++e) p.add_block(static_cast<int>(structure.size()));
  std::vector<sdp::LinearFunctional> a(static_cast<std::size_t>(num_free));
  sdp::LinearFunctional c;
  for (int e = 0; e < k; ++e) {
    for (int j = 0; j < nm; ++j) {
      const Affine& v = y[var(e, j)];
      for (const auto& [r, col] : structure.entries(j)) {
        const double w = r == col ? 1.0 : 2.0;
        if (v.constant != 0.0) c.push_back({e, r, col, -w * v.constant});
        for (const auto& [u, coef] : v.terms) {
          a[static_cast<std::size_t>(u)].push_back({e, r, col, w * coef});
        }
      }
    }
  }

  Affine guess;
  for (int e = 0; e < k - 1; ++e) {
    add_scaled(guess, y[var(e, structure.alice_id(e + 1, guessed_setting))], 1.0);
  }
  add_scaled(guess, y[var(k - 1, id0)], 1.0);
  for (int a2 = 1; a2 < k; ++a2) {
    add_scaled(guess, y[var(k - 1, structure.alice_id(a2, guessed_setting))], -1.0);
  }
  out.offset = guess.constant;
  for (int u = 0; u < num_free; ++u) {
    auto it = guess.terms.find(u);
    p.add_constraint(merged(std::move(a[static_cast<std::size_t>(u)])),
                     it == guess.terms.end() ? 0.0 : -it->second);
  }
  p.objective = merged(std::move(c));
  return out;
}

GuessingBound bound_guessing_probability(double bell_value, const BellInequality& ineq,
                                         int guessed_setting,
                                         const MomentStructure& structure,
                                         const sdp::SdpOptions& options) {
  const GuessingProgram prog = guessing_problem(bell_value, ineq, guessed_setting, structure);
  const sdp::SdpSolution sol = sdp::solve(prog.sdp, options);
  GuessingBound out;
  out.gap = sol.gap;
  out.iterations = sol.iterations;
  switch (sol.status) {
    case sdp::SdpStatus::dual_infeasible: out.status = sdp::SdpStatus::primal_infeasible; break;
    case sdp::SdpStatus::primal_infeasible: out.status = sdp::SdpStatus::dual_infeasible; break;
    case sdp::SdpStatus::iteration_limit:
    case sdp::SdpStatus::numerical_error:
      // Bell values on the quantum boundary leave the moment problem without
      // an interior point and the iterates stall short of full accuracy.
      out.status = sol.primal_infeasibility <= kBoundaryTol &&
                           sol.dual_infeasibility <= kBoundaryTol &&
                           std::abs(sol.gap) <= kInfeasibleGap
                       ? sdp::SdpStatus::optimal
                       : sol.status;
      break;
    default: out.status = sol.status;
  }
  if (out.status == sdp::SdpStatus::optimal && std::abs(sol.gap) > kInfeasibleGap) {
    out.status = sdp::SdpStatus::primal_infeasible;
  }
  out.p_guess = out.ok() ? std::min(prog.offset - sol.primal_objective, 1.0)
                         : std::numeric_limits<double>::quiet_NaN();
  return out;
}

sdp::SdpProblem membership_problem(const Behavior& behavior, const MomentStructure& structure) {
  const Scenario& s = structure.scenario();
  if (!(behavior.scenario() == s)) {
    throw std::invalid_argument(fmt::format("behavior is {} but moment structure is {}",
                                            behavior.scenario().to_string(), s.to_string()));
  }
  const int m = s.m();
  const int k = s.k();
  const int n = static_cast<int>(structure.size());

  // Pinned moment values; the rest are free.
  std::vector<double> value(structure.num_moments(), std::numeric_limits<double>::quiet_NaN());
  value[static_cast<std::size_t>(structure.identity_id())] = 1.0;
  for (int x = 1; x <= m; ++x) {
    for (int a = 1; a < k; ++a) {
      double pa = 0.0;
      for (int y = 1; y <= m; ++y) {
        for (int b = 1; b <= k; ++b) pa += behavior(a, b, x, y);
      }
      value[static_cast<std::size_t>(structure.alice_id(a, x))] = pa / m;
    }
  }
  for (int y = 1; y <= m; ++y) {
    for (int b = 1; b < k; ++b) {
      double pb = 0.0;
      for (int x = 1; x <= m; ++x) {
        for (int a = 1; a <= k; ++a) pb += behavior(a, b, x, y);
      }
      value[static_cast<std::size_t>(structure.bob_id(b, y))] = pb / m;
    }
  }
  for (int x = 1; x <= m; ++x) {
    for (int y = 1; y <= m; ++y) {
      for (int a = 1; a < k; ++a) {
        for (int b = 1; b < k; ++b) {
          value[static_cast<std::size_t>(structure.joint_id(a, b, x, y))] = behavior(a, b, x, y);
        }
      }
    }
  }

  // max -F0•W  s.t.  tr W = 1,  F_j•W = 0 for free classes j,  W ⪰ 0.
  sdp::SdpProblem p;
  p.add_block(n);
  sdp::LinearFunctional trace;
  for (int i = 0; i < n; ++i) trace.push_back({0, i, i, 1.0});
  p.add_constraint(trace, 1.0);
  sdp::LinearFunctional obj;
  for (std::size_t id = 0; id < structure.num_moments(); ++id) {
    sdp::LinearFunctional f;
    for (const auto& [r, c] : structure.entries(static_cast<int>(id))) {
      f.push_back({0, r, c, r == c ? 1.0 : 2.0});
    }
    if (std::isnan(value[id])) {
      p.add_constraint(std::move(f), 0.0);
    } else if (value[id] != 0.0) {
      for (sdp::Entry& e : f) obj.push_back({0, e.row, e.col, -value[id] * e.value});
    }
  }
  p.objective = merged(std::move(obj));
  return p;
}

MembershipResult q2_membership_check(const Behavior& behavior,
                                     const MomentStructure& structure, double slack) {
  const sdp::SdpProblem p = membership_problem(behavior, structure);
  const sdp::SdpSolution sol = sdp::solve(p);
  MembershipResult out;
  out.status = sol.status;
  if (sol.status != sdp::SdpStatus::optimal) return out;
  out.min_eigenvalue = -0.5 * (sol.primal_objective + sol.dual_objective);
  out.member = out.min_eigenvalue >= -slack;
  return out;
}

bool q2_membership(const Behavior& behavior, const MomentStructure& structure) {
  const MembershipResult r = q2_membership_check(behavior, structure);
  if (r.status != sdp::SdpStatus::optimal) {
    throw NumericalError(
        fmt::format("membership SDP ended with status {}", sdp::to_string(r.status)));
  }
  return r.member;
}

}  // namespace dibell
