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

#include <set>
#include <sstream>

#include "dibell/sampler.hpp"
#include "dibell/separation.hpp"
#include "oracles.hpp"

using namespace dibell;

namespace {

const SamplingContext& ctx22() {
  static const SamplingContext ctx(Scenario(2, 2));
  return ctx;
}

SamplerConfig small_config(std::size_t n, int threads = 1) {
  SamplerConfig c;
  c.n_samples = n;
  c.master_seed = 99;
  c.threads = threads;
  return c;
}

std::string serialize(const Dataset& d) {
  std::ostringstream out;
  write_dataset(out, d);
  return out.str();
}

}  // namespace

TEST_CASE("mix64 is the splitmix64 step") {
  // First splitmix64 output from state 0.
  CHECK(mix64(0) == 0xe220a8397b1dcdafULL);
  for (std::uint64_t x : {1ull, 42ull, 0xdeadbeefull})
    CHECK(mix64(x) == oracle::splitmix64_finalize(x + 0x9e3779b97f4a7c15ULL));
  CHECK(record_seed(1, 2, 0) != record_seed(1, 2, 1));
  CHECK(record_seed(1, 2, 0) != record_seed(1, 3, 0));
  CHECK(record_seed(1, 2, 0) != record_seed(2, 2, 0));
}

TEST_CASE("uniform01 range") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double u = uniform01(rng);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("mix_behavior formula") {
  const auto& fd = ctx22().facets().front();
  const std::vector<double> w{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
  const double w0 = 0.25;
  const auto b = mix_behavior(fd.pr_box, fd.spanning, w0, w);
  const double n = static_cast<double>(fd.spanning.size());
  double denom = n * w0;
  for (double x : w) denom += x;
  for (std::size_t j = 0; j < 16; ++j) {
    double num = n * w0 * fd.pr_box.vector()[j];
    for (std::size_t i = 0; i < w.size(); ++i) num += w[i] * fd.spanning[i].behavior.vector()[j];
    CHECK(b.vector()[j] == doctest::Approx(num / denom).epsilon(1e-14));
  }
  CHECK_THROWS(mix_behavior(fd.pr_box, fd.spanning, 0.0, std::vector<double>(8, 0.0)));
}

TEST_CASE("property: records satisfy the labeling contract") {
  const auto d = generate_dataset(ctx22(), small_config(40));
  REQUIRE(d.records.size() == 40);
  const LocalPolytope& poly = ctx22().polytope();
  for (const auto& r : d.records) {
    const Behavior b(r.scenario, r.p);
    CHECK(check_no_signaling(b, 1e-9).ok);
    CHECK(r.bell_value > r.c);
    CHECK(dot(r.h, r.p) == doctest::Approx(r.bell_value).epsilon(1e-12));
    CHECK(r.p_guess >= 0.5 - 1e-9);
    CHECK(r.p_guess < 1.0);
    CHECK(r.facet_class == "CHSH");
    for (const auto& v : oracle::vertices(2, 2)) CHECK(dot(r.h, v) <= r.c + 1e-8);
    double mx = 0.0;
    for (double v : r.h) mx = std::max(mx, std::abs(v));
    CHECK(mx == doctest::Approx(1.0));
    CHECK(poly.classical_maximum(r.h) == doctest::Approx(r.c).epsilon(1e-12));
  }
  CHECK(d.stats.accepted == 40);
  CHECK(d.stats.attempts >= 40);
  CHECK(d.stats.q2_acceptance_rate() > 0.0);
  CHECK(d.stats.q2_acceptance_rate() <= 1.0);
}

TEST_CASE("property: output does not depend on the thread count") {
  const auto a = generate_dataset(ctx22(), small_config(24, 1));
  const auto b = generate_dataset(ctx22(), small_config(24, 3));
  CHECK(serialize(a) == serialize(b));
  // Random access reproduces the same record.
  CHECK(generate_record(ctx22(), small_config(24), 17) == a.records[17]);
}

TEST_CASE("different seeds give different data") {
  auto c = small_config(5);
  const auto a = generate_dataset(ctx22(), c);
  c.master_seed = 100;
  const auto b = generate_dataset(ctx22(), c);
  CHECK(a.records.front().p != b.records.front().p);
}

TEST_CASE("no-filter mode labels without the membership check") {
  auto c = small_config(10);
  c.q2_filter = false;
  const auto d = generate_dataset(ctx22(), c);
  CHECK(d.records.size() == 10);
  CHECK(d.stats.q2_rejected == 0);
}

TEST_CASE("JSON lines round trip") {
  auto d = generate_dataset(ctx22(), small_config(12));
  d.provenance = {{"config_hash", "abc"}};
  const std::string text = serialize(d);
  std::istringstream in(text);
  const auto back = read_dataset(in);
  CHECK(back.records == d.records);
  CHECK(back.config.master_seed == 99);
  CHECK(back.stats.attempts == d.stats.attempts);
  CHECK(back.provenance == d.provenance);
  CHECK(serialize(back) == text);

  std::istringstream bad(text + "{\"p\": [1]}\n");
  CHECK_THROWS(read_dataset(bad));
  std::istringstream garbage("not json\n");
  CHECK_THROWS(read_dataset(garbage));
}

TEST_CASE("split") {
  std::vector<LabeledRecord> recs(101);
  for (std::size_t i = 0; i < recs.size(); ++i) recs[i].seed = i;
  const auto [train, test] = split_dataset(recs, 7);
  CHECK(train.size() == 80);
  CHECK(test.size() == 21);
  std::set<std::uint64_t> seen;
  for (const auto& r : train) seen.insert(r.seed);
  for (const auto& r : test) seen.insert(r.seed);
  CHECK(seen.size() == 101);
  const auto again = split_dataset(recs, 7);
  CHECK(again.first == train);
  CHECK(split_dataset(recs, 8).first != train);
  CHECK_THROWS(split_dataset(std::vector<LabeledRecord>(9), 1));
}

TEST_CASE("property: seeded permutation is a permutation") {
  for (std::size_t n : {1ul, 2ul, 17ul, 1000ul}) {
    auto p = seeded_permutation(n, n * 31);
    std::sort(p.begin(), p.end());
    for (std::size_t i = 0; i < n; ++i) CHECK(p[i] == i);
  }
}

TEST_CASE("failure budget") {
  auto c = small_config(5);
  c.max_failure_rate = -1.0;
  CHECK_THROWS(generate_dataset(ctx22(), c));
  c.n_samples = 0;
  CHECK_THROWS(generate_dataset(ctx22(), c));
}
