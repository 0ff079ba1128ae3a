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

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dibell/facets.hpp"
#include "dibell/npa.hpp"
#include "dibell/scenario.hpp"

namespace dibell {

/// One labeled sample: the behavior, its optimal (canonical) Bell
/// inequality, the Bell value h·P and the guessing-probability bound.
struct LabeledRecord {
  Scenario scenario{2, 2};
  std::vector<double> p;
  std::vector<double> h;
  double c = 0.0;
  double bell_value = 0.0;
  double p_guess = 0.0;
  std::string facet_class;  // class of the facet the sample was drawn from
  std::uint64_t seed = 0;   // seed of the accepted draw

  bool operator==(const LabeledRecord&) const = default;
};

struct SamplerConfig {
  Scenario scenario{2, 2};
  std::size_t n_samples = 1;
  std::uint64_t master_seed = 0;
  bool q2_filter = true;
  int threads = 1;
  int guessed_setting = 1;
  double max_failure_rate = 0.05;
  /// Draws allowed per record before generation gives up.
  int max_attempts = 1000;
};

/// Uniform double in [0,1) from the top 53 bits of a 64-bit draw. Fixed so
/// datasets do not depend on the standard library's distributions.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Stateless 64-bit mix (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t x);

/// Seed of draw `attempt` for record `index`: depends on nothing else, so
/// records can be regenerated individually and in any order.
std::uint64_t record_seed(std::uint64_t master_seed, std::uint64_t index, std::uint64_t attempt);

/// (n w0 PR + Σ w_i V_i) / (n w0 + Σ w_i) with n = number of spanning
/// vertices. Throws std::invalid_argument if the weights sum to zero.
Behavior mix_behavior(const Behavior& pr_box, const std::vector<DeterministicVertex>& spanning,
                      double w0, std::span<const double> weights);

/// Draws w0 and the w_i i.i.d. uniform on [0,1] and mixes. Redraws an
/// all-zero weight set up to 10 times, then throws NumericalError.
Behavior sample_behavior(const BellInequality& facet,
                         const std::vector<DeterministicVertex>& spanning,
                         const Behavior& pr_box, std::mt19937_64& rng);

/// Everything shared across samples of one scenario: polytope, facets with
/// their spanning vertices and PR boxes, and the level-2 moment structure.
class SamplingContext {
 public:
  struct FacetData {
    Facet facet;
    std::vector<DeterministicVertex> spanning;
    Behavior pr_box;
  };

  explicit SamplingContext(const Scenario& scenario);

  const Scenario& scenario() const { return polytope_.scenario(); }
  const LocalPolytope& polytope() const { return polytope_; }
  const std::vector<FacetData>& facets() const { return facets_; }
  const MomentStructure& moments() const { return moments_; }

 private:
  LocalPolytope polytope_;
  std::vector<FacetData> facets_;
  MomentStructure moments_;
};

enum class AttemptOutcome {
  accepted,
  q2_rejected,
  local,            // LP found no separating inequality
  sdp_infeasible,   // Bell value beyond the relaxed quantum set
  solver_failure,
};

const char* to_string(AttemptOutcome outcome);

struct AttemptResult {
  AttemptOutcome outcome = AttemptOutcome::solver_failure;
  LabeledRecord record;
};

/// One draw for record `index` (facet index mod #facets) with the given
/// seed, filtered and labeled.
AttemptResult label_attempt(const SamplingContext& ctx, const SamplerConfig& config,
                            std::size_t index, std::uint64_t seed);

struct DatasetStats {
  std::size_t attempts = 0;
  std::size_t accepted = 0;
  std::size_t q2_rejected = 0;
  std::size_t local = 0;
  std::size_t sdp_infeasible = 0;
  std::size_t solver_failures = 0;

  /// Fraction of Q2-tested draws that passed.
  double q2_acceptance_rate() const;
  double failure_rate() const;
};

struct Dataset {
  SamplerConfig config;
  std::vector<LabeledRecord> records;
  DatasetStats stats;
  /// Written to the header as "run" when not null (config echo and hash).
  nlohmann::json provenance;
};

/// Record `index` exactly as generate_dataset produces it.
LabeledRecord generate_record(const SamplingContext& ctx, const SamplerConfig& config,
                              std::size_t index, DatasetStats* stats = nullptr);

/// n_samples records, facets visited round-robin, on config.threads
/// workers. Output is independent of the thread count. Throws
/// NumericalError when solver failures exceed max_failure_rate of the
/// attempts.
Dataset generate_dataset(const SamplerConfig& config);
Dataset generate_dataset(const SamplingContext& ctx, const SamplerConfig& config);

/// Seeded permutation of 0..n-1 (Fisher-Yates on mt19937_64).
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

/// Disjoint (train_val, test) split: floor(0.8 n) records, then the rest,
/// after a seeded shuffle. Throws std::invalid_argument below 10 records.
std::pair<std::vector<LabeledRecord>, std::vector<LabeledRecord>> split_dataset(
    const std::vector<LabeledRecord>& records, std::uint64_t seed,
    double train_fraction = 0.8);

// JSON-lines persistence: a header object, then one record per line.

inline constexpr int kDatasetFormatVersion = 1;

nlohmann::json to_json(const LabeledRecord& record);
LabeledRecord record_from_json(const nlohmann::json& j);
nlohmann::json dataset_header(const SamplerConfig& config, const DatasetStats& stats,
                              const nlohmann::json& provenance = nullptr);

void write_dataset(std::ostream& out, const Dataset& dataset);
void write_dataset(const std::string& path, const Dataset& dataset);

/// Reads a dataset; the header's config echo is restored where present.
Dataset read_dataset(std::istream& in);
Dataset read_dataset(const std::string& path);

}  // namespace dibell
