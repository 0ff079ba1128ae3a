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

#include "dibell/config.hpp"

using namespace dibell;

TEST_CASE("parse key = value lines") {
  const auto c = Config::parse(
      "# smoke run\n"
      "scenario = 3,2\n"
      "n_samples=500   # trailing comment\n"
      "\n"
      "  q2_filter = no\n"
      "rate = 1e-3\n"
      "widths = 8, 4 ,2\n");
  CHECK(c.get_scenario("scenario", Scenario(2, 2)) == Scenario(3, 2));
  CHECK(c.get_int("n_samples", 0) == 500);
  CHECK_FALSE(c.get_bool("q2_filter", true));
  CHECK(c.get_double("rate", 0) == 1e-3);
  CHECK(c.get_int_list("widths", {}) == std::vector<int>{8, 4, 2});
  CHECK(c.get("missing", "x") == "x");
  CHECK(c.get_uint64("missing", 7) == 7);
}

TEST_CASE("errors") {
  CHECK_THROWS_AS(Config::parse("novalue\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("a = 1\na = 2\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("Bad-Key = 1\n"), ConfigError);
  const auto c = Config::parse("n = 12x\nb = maybe\ns = 2\n");
  CHECK_THROWS_AS(c.get_int("n", 0), ConfigError);
  CHECK_THROWS_AS(c.get_bool("b", true), ConfigError);
  CHECK_THROWS_AS(c.get_scenario("s", Scenario(2, 2)), ConfigError);
  CHECK_THROWS_AS(c.require_known({"n", "b"}), ConfigError);
  CHECK_NOTHROW(c.require_known({"n", "b", "s"}));
  CHECK_THROWS_AS(Config::load("/nonexistent/dibell.conf"), ConfigError);
}

TEST_CASE("property: hash depends on content, not layout") {
  const auto a = Config::parse("x = 1\ny = 2\n");
  const auto b = Config::parse("# reordered\ny=2\n\nx =   1\n");
  CHECK(a.hash() == b.hash());
  CHECK(a.to_text() == b.to_text());
  CHECK(a.hash() != Config::parse("x = 1\ny = 3\n").hash());
  CHECK(a.hash().size() == 16);
  // Canonical text parses back to the same config.
  CHECK(Config::parse(a.to_text()).entries() == a.entries());
}

TEST_CASE("merge and provenance") {
  auto a = Config::parse("x = 1\ny = 2\n");
  a.merge(Config::parse("y = 5\nz = 0\n"));
  CHECK(a.get("y", "") == "5");
  CHECK(a.get("z", "") == "0");
  const auto p = provenance(a);
  CHECK(p["config"]["x"] == "1");
  CHECK(p["config_hash"] == a.hash());
}
