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

#include <compare>
#include <map>
#include <span>
#include <utility>
#include <string>
#include <vector>

#include "dibell/facets.hpp"
#include "dibell/scenario.hpp"
#include "dibell/sdp.hpp"

namespace dibell {

/// Projector A(a|x) (party 0) or B(b|y) (party 1). Setting and outcome are
/// 0-based; the last outcome k-1 never appears (it is eliminated through
/// completeness).
struct Symbol {
  int party;
  int setting;
  int outcome;
  auto operator<=>(const Symbol&) const = default;
};

/// Reduced operator product: Alice's projectors first, then Bob's.
struct Word {
  std::vector<Symbol> alice;
  std::vector<Symbol> bob;

  std::size_t length() const { return alice.size() + bob.size(); }
  bool is_identity() const { return alice.empty() && bob.empty(); }
  std::string to_string() const;
  auto operator<=>(const Word&) const = default;
};

/// Reduces a raw symbol sequence by commutation across parties,
/// idempotence and orthogonality. Returns false if the product is zero.
bool reduce(const std::vector<Symbol>& sequence, Word& out);

/// Moment matrix bookkeeping for one NPA level. moment_id(i, j) names the
/// moment <w_i† w_j>; pairs with the same reduced product (up to adjoint,
/// as all moments are taken real) share an id. Zero products map to
/// kZeroMoment.
class MomentStructure {
 public:
  static constexpr int kZeroMoment = -1;

  MomentStructure(Scenario scenario, int level);

  const Scenario& scenario() const { return scenario_; }
  int level() const { return level_; }
  const std::vector<Word>& words() const { return words_; }
  std::size_t size() const { return words_.size(); }

  int moment_id(std::size_t i, std::size_t j) const { return ids_[i * words_.size() + j]; }
  std::size_t num_moments() const { return moments_.size(); }
  const Word& moment_word(int id) const { return moments_[static_cast<std::size_t>(id)]; }

  /// Upper-triangle (row <= col) entries carrying the moment, row-major.
  const std::vector<std::pair<int, int>>& entries(int id) const {
    return entries_[static_cast<std::size_t>(id)];
  }

  /// Upper-triangle entries whose product vanishes.
  const std::vector<std::pair<int, int>>& zero_entries() const { return zero_entries_; }

  /// Id of an arbitrary product; kZeroMoment if it vanishes. Throws
  /// std::out_of_range if the moment does not occur in the matrix.
  int find(const std::vector<Symbol>& sequence) const;

  int identity_id() const { return 0; }
  int alice_id(int a, int x) const;  // <A(a|x)>, 1-based labels, a < k
  int bob_id(int b, int y) const;    // <B(b|y)>
  int joint_id(int a, int b, int x, int y) const;  // <A(a|x) B(b|y)>

  /// P(ab|xy) as a linear combination of moment ids (1-based labels, any
  /// outcome, last outcomes eliminated through completeness).
  std::map<int, double> probability(int a, int b, int x, int y) const;

  /// Σ h_abxy P(ab|xy) as a combination of moment ids.
  std::map<int, double> bell_functional(std::span<const double> h) const;

 private:
  Scenario scenario_;
  int level_;
  std::vector<Word> words_;
  std::vector<int> ids_;
  std::vector<Word> moments_;
  std::vector<std::vector<std::pair<int, int>>> entries_;
  std::vector<std::pair<int, int>> zero_entries_;
  std::map<Word, int> lookup_;
};

/// Level 1 or 2 word list and moment map. Throws std::invalid_argument for
/// other levels.
MomentStructure build_moment_structure(const Scenario& scenario, int level);

/// An "optimal" solve whose duality gap exceeds this is reported as
/// infeasible.
inline constexpr double kInfeasibleGap = 1e-5;
/// Residual accepted from a stalled solve (Bell value on the boundary).
inline constexpr double kBoundaryTol = 1e-4;

struct GuessingBound {
  double p_guess = 0.0;
  sdp::SdpStatus status = sdp::SdpStatus::numerical_error;
  double gap = 0.0;
  int iterations = 0;

  bool ok() const { return status == sdp::SdpStatus::optimal; }
};

/// Eve-decomposition form of the guessing-probability problem: k moment
/// matrices Γ_e, one per guess e, with Σ_e Γ_e[1,1] = 1 and the summed Bell
/// value fixed; maximizes Σ_e P_e(a = e | x).
///
/// The moments are the dual variables of `sdp` (its dual constraint
/// Σ z_u A_u - C ⪰ 0 is block-diag(Γ_e)), with the two equalities
/// eliminated. The guessing probability is offset - (optimum of sdp), and
/// offset - C•X is an upper bound for any feasible primal X.
struct GuessingProgram {
  sdp::SdpProblem sdp;
  double offset = 0.0;
};

/// `guessed_setting` is 1-based.
GuessingProgram guessing_problem(double bell_value, const BellInequality& ineq,
                                 int guessed_setting, const MomentStructure& structure);

/// Upper bound on Eve's probability of guessing Alice's outcome for the
/// given setting, among quantum (NPA-relaxed) realizations with the given
/// Bell value. The status refers to the moment problem: a Bell value above
/// the relaxed quantum maximum yields primal_infeasible and no p_guess.
GuessingBound bound_guessing_probability(double bell_value, const BellInequality& ineq,
                                         int guessed_setting,
                                         const MomentStructure& structure,
                                         const sdp::SdpOptions& options = {});

inline constexpr double kMembershipSlack = 1e-7;

struct MembershipResult {
  bool member = false;
  /// Largest achievable smallest eigenvalue of a moment matrix matching the
  /// behavior; the behavior is accepted when this is >= -slack.
  double min_eigenvalue = 0.0;
  sdp::SdpStatus status = sdp::SdpStatus::numerical_error;
};

/// Dual form of "maximize t such that Γ - t·I ⪰ 0", where Γ is a moment
/// matrix whose probability entries are pinned to the behavior.
sdp::SdpProblem membership_problem(const Behavior& behavior, const MomentStructure& structure);

MembershipResult q2_membership_check(const Behavior& behavior,
                                     const MomentStructure& structure,
                                     double slack = kMembershipSlack);

/// True iff the behavior admits a PSD moment matrix at the structure's
/// level. Throws NumericalError when the solver fails.
bool q2_membership(const Behavior& behavior, const MomentStructure& structure);

}  // namespace dibell
