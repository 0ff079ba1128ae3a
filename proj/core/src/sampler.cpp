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

#include "dibell/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "dibell/error.hpp"
#include "dibell/separation.hpp"

namespace dibell {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t record_seed(std::uint64_t master_seed, std::uint64_t index,
                          std::uint64_t attempt) {
  return mix64(mix64(mix64(master_seed) ^ index) ^ (attempt * 0xd1b54a32d192ed03ULL));
}

Behavior mix_behavior(const Behavior& pr_box, const std::vector<DeterministicVertex>& spanning,
                      double w0, std::span<const double> weights) {
  if (spanning.empty()) throw std::invalid_argument("no spanning vertices");
  if (weights.size() != spanning.size()) {
    throw std::invalid_argument(fmt::format("{} weights for {} spanning vertices",
                                            weights.size(), spanning.size()));
  }
  const double n = static_cast<double>(spanning.size());
  double total = n * w0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw std::invalid_argument("mixture weights sum to zero");

  const auto pr = pr_box.values();
  std::vector<double> p(pr.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = n * w0 * pr[i];
  for (std::size_t v = 0; v < spanning.size(); ++v) {
    if (weights[v] == 0.0) continue;
    const auto q = spanning[v].behavior.values();
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += weights[v] * q[i];
  }
  for (double& x : p) x /= total;
  return Behavior(pr_box.scenario(), std::move(p));
}

Behavior sample_behavior(const BellInequality& facet,
                         const std::vector<DeterministicVertex>& spanning,
                         const Behavior& pr_box, std::mt19937_64& rng) {
  if (!(facet.scenario == pr_box.scenario())) {
    throw std::invalid_argument("facet and PR box scenarios differ");
  }
  std::vector<double> w(spanning.size());
  for (int attempt = 0; attempt < 10; ++attempt) {
    const double w0 = uniform01(rng);
    double sum = w0;
    for (double& x : w) {
      x = uniform01(rng);
      sum += x;
    }
    if (sum > 0.0) return mix_behavior(pr_box, spanning, w0, w);
  }
  throw NumericalError("ten all-zero weight draws in a row");
}

SamplingContext::SamplingContext(const Scenario& scenario)
    : polytope_(scenario), moments_(scenario, 2) {
  for (Facet& f : facet_inequalities(polytope_)) {
    auto spanning = spanning_vertices(f.inequality, polytope_.vertices());
    Behavior box = find_pr_box(f.inequality, polytope_);
    facets_.push_back({std::move(f), std::move(spanning), std::move(box)});
  }
}

const char* to_string(AttemptOutcome outcome) {
  switch (outcome) {
    case AttemptOutcome::accepted: return "accepted";
    case AttemptOutcome::q2_rejected: return "q2_rejected";
    case AttemptOutcome::local: return "local";
    case AttemptOutcome::sdp_infeasible: return "sdp_infeasible";
    case AttemptOutcome::solver_failure: return "solver_failure";
  }
  return "unknown";
}

AttemptResult label_attempt(const SamplingContext& ctx, const SamplerConfig& config,
                            std::size_t index, std::uint64_t seed) {
  const auto& fd = ctx.facets()[index % ctx.facets().size()];
  std::mt19937_64 rng(seed);
  const Behavior behavior = sample_behavior(fd.facet.inequality, fd.spanning, fd.pr_box, rng);

  AttemptResult out;
  if (config.q2_filter) {
    const MembershipResult q2 = q2_membership_check(behavior, ctx.moments());
    if (q2.status != sdp::SdpStatus::optimal) return out;
    if (!q2.member) {
      out.outcome = AttemptOutcome::q2_rejected;
      return out;
    }
  }

  const LpSolution lp = find_optimal_bell_inequality(behavior, ctx.polytope());
  if (lp.status == LpStatus::local_behavior) {
    out.outcome = AttemptOutcome::local;
    return out;
  }
  if (lp.status != LpStatus::optimal) return out;

  BellInequality ineq{ctx.scenario(), lp.h, lp.c};
  const double value = ineq.value(behavior);
  const GuessingBound g =
      bound_guessing_probability(value, ineq, config.guessed_setting, ctx.moments());
  if (g.status == sdp::SdpStatus::primal_infeasible) {
    out.outcome = AttemptOutcome::sdp_infeasible;
    return out;
  }
  if (!g.ok()) return out;

  out.outcome = AttemptOutcome::accepted;
  LabeledRecord& r = out.record;
  r.scenario = ctx.scenario();
  r.p = behavior.vector();
  r.h = std::move(ineq.h);
  r.c = ineq.c;
  r.bell_value = value;
  r.p_guess = g.p_guess;
  r.facet_class = fd.facet.facet_class;
  r.seed = seed;
  return out;
}

double DatasetStats::q2_acceptance_rate() const {
  const std::size_t tested = attempts - solver_failures;
  if (tested == 0) return 0.0;
  return static_cast<double>(tested - q2_rejected) / static_cast<double>(tested);
}

double DatasetStats::failure_rate() const {
  if (attempts == 0) return 0.0;
  return static_cast<double>(solver_failures) / static_cast<double>(attempts);
}

namespace {

void count(DatasetStats& s, AttemptOutcome o) {
  ++s.attempts;
  switch (o) {
    case AttemptOutcome::accepted: ++s.accepted; break;
    case AttemptOutcome::q2_rejected: ++s.q2_rejected; break;
    case AttemptOutcome::local: ++s.local; break;
    case AttemptOutcome::sdp_infeasible: ++s.sdp_infeasible; break;
    case AttemptOutcome::solver_failure: ++s.solver_failures; break;
  }
}

void merge(DatasetStats& into, const DatasetStats& from) {
  into.attempts += from.attempts;
  into.accepted += from.accepted;
  into.q2_rejected += from.q2_rejected;
  into.local += from.local;
  into.sdp_infeasible += from.sdp_infeasible;
  into.solver_failures += from.solver_failures;
}

}  // namespace

LabeledRecord generate_record(const SamplingContext& ctx, const SamplerConfig& config,
                              std::size_t index, DatasetStats* stats) {
  for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
    const std::uint64_t seed = record_seed(config.master_seed, index, static_cast<std::uint64_t>(attempt));
    AttemptResult r = label_attempt(ctx, config, index, seed);
    if (stats != nullptr) count(*stats, r.outcome);
    if (r.outcome == AttemptOutcome::accepted) return std::move(r.record);
  }
  throw NumericalError(fmt::format("record {}: no acceptable draw in {} attempts", index,
                                   config.max_attempts));
}

Dataset generate_dataset(const SamplerConfig& config) {
  const SamplingContext ctx(config.scenario);
  return generate_dataset(ctx, config);
}

Dataset generate_dataset(const SamplingContext& ctx, const SamplerConfig& config) {
  if (config.n_samples < 1) throw std::invalid_argument("n_samples must be at least 1");
  if (!(config.scenario == ctx.scenario())) {
    throw std::invalid_argument("sampler config and context scenarios differ");
  }
  Dataset out;
  out.config = config;
  out.records.resize(config.n_samples);

  const int workers = std::max(1, config.threads);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::atomic<std::size_t> failures{0};
  std::mutex mu;
  std::exception_ptr error;
  // Early exit once failures alone exceed the allowed share of all records.
  const auto failure_budget = static_cast<std::size_t>(
      config.max_failure_rate * static_cast<double>(config.n_samples) * 2.0) + 20;

  auto work = [&] {
    DatasetStats local;
    try {
      while (!abort.load()) {
        const std::size_t i = next.fetch_add(1);
        if (i >= config.n_samples) break;
        const std::size_t before = local.solver_failures;
        out.records[i] = generate_record(ctx, config, i, &local);
        if (local.solver_failures > before &&
            failures.fetch_add(local.solver_failures - before) >= failure_budget) {
          throw NumericalError(fmt::format("more than {} solver failures", failure_budget));
        }
      }
    } catch (...) {
      std::lock_guard lock(mu);
      if (!error) error = std::current_exception();
      abort.store(true);
    }
    std::lock_guard lock(mu);
    merge(out.stats, local);
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  if (out.stats.failure_rate() > config.max_failure_rate) {
    throw NumericalError(fmt::format(
        "solver failure rate {:.3f} exceeds {:.3f} ({} of {} draws)", out.stats.failure_rate(),
        config.max_failure_rate, out.stats.solver_failures, out.stats.attempts));
  }
  return out;
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  __extension__ using u128 = unsigned __int128;
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(
        (static_cast<u128>(rng()) * i) >> 64);
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

std::pair<std::vector<LabeledRecord>, std::vector<LabeledRecord>> split_dataset(
    const std::vector<LabeledRecord>& records, std::uint64_t seed, double train_fraction) {
  if (records.size() < 10) {
    throw std::invalid_argument(
        fmt::format("split needs at least 10 records, got {}", records.size()));
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("train fraction must lie in (0,1)");
  }
  const auto n_train = static_cast<std::size_t>(
      std::floor(train_fraction * static_cast<double>(records.size()) + 1e-9));
  const auto perm = seeded_permutation(records.size(), seed);
  std::pair<std::vector<LabeledRecord>, std::vector<LabeledRecord>> out;
  out.first.reserve(n_train);
  out.second.reserve(records.size() - n_train);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    (i < n_train ? out.first : out.second).push_back(records[perm[i]]);
  }
  return out;
}

}  // namespace dibell
