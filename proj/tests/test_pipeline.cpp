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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dibell/pipeline.hpp"

using namespace dibell;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const char* env = std::getenv("DIBELL_TEST_TMP");
  fs::path root = env ? fs::path(env) : fs::temp_directory_path() / "dibell_pipeline_test";
  fs::path dir = root / name;
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Config smoke(const fs::path& out) {
  auto c = Config::parse(
      "scenario = 2,2\n"
      "seed = 7\n"
      "n_samples = 1000\n"
      "epochs = 10\n"
      "bench_n = 100\n");
  c.set("out_dir", out.string());
  return c;
}

}  // namespace

TEST_CASE("smoke pipeline emits every artifact and reruns identically") {
  const auto dir_a = scratch("a"), dir_b = scratch("b");
  const auto r = run_pipeline(smoke(dir_a));
  for (const char* f : {"config.txt", "facets.json", "dataset.jsonl", "train.jsonl", "test.jsonl",
                        "model_pguess.json", "model_nn1.json", "model_nn2.json", "report.json",
                        "bench.json", "manifest.json"})
    CHECK(fs::exists(dir_a / f));
  CHECK(r.stages.size() == 8);
  for (const auto& s : r.stages) CHECK(s.status == "ok");

  const auto report = read_json_file((dir_a / "report.json").string());
  CHECK(report["n_test"] == 200);
  for (const char* m : {"pguess", "nn1", "nn2"}) {
    for (const char* k : {"mae_pg", "mse_pg", "mae_h", "mse_h", "frac_pg_lt_1",
                          "mae_pg_via_predicted_ineq", "mse_pg_via_predicted_ineq"})
      CHECK(report["models"][m].contains(k));
  }
  CHECK(report["models"]["nn2"]["mae_h"].is_number());
  CHECK(report["models"]["pguess"]["mae_h"].is_null());

  // Every JSON artifact carries the config hash.
  const std::string hash = smoke(dir_a).hash();
  for (const char* f : {"facets.json", "model_nn2.json", "report.json", "bench.json", "manifest.json"})
    CHECK(read_json_file((dir_a / f).string())["run"]["config_hash"] == hash);
  std::ifstream data(dir_a / "dataset.jsonl");
  std::string header;
  std::getline(data, header);
  CHECK(nlohmann::json::parse(header)["run"]["config_hash"] == hash);

  const auto bench = read_json_file((dir_a / "bench.json").string());
  CHECK(bench["pguess"]["n"] == 100);
  CHECK(bench["bell_lp"]["network"]["method"] == "network:nn2");

  // Same config except the output directory: the hash differs, so compare
  // the record lines of the datasets and rerun the same directory for bytes.
  run_pipeline(smoke(dir_b));
  auto records = [](const fs::path& p) {
    std::ifstream f(p);
    std::string line, all;
    std::getline(f, line);
    while (std::getline(f, line)) all += line + "\n";
    return all;
  };
  CHECK(records(dir_a / "dataset.jsonl") == records(dir_b / "dataset.jsonl"));
  const std::string first = slurp(dir_a / "dataset.jsonl");
  const std::string model = slurp(dir_a / "model_nn1.json");
  run_pipeline(smoke(dir_a));
  CHECK(slurp(dir_a / "dataset.jsonl") == first);
  CHECK(slurp(dir_a / "model_nn1.json") == model);
}

TEST_CASE("stage failure names the stage and leaves a manifest") {
  const auto dir = scratch("fail");
  auto c = smoke(dir);
  c.set("max_failure_rate", "-1");
  try {
    run_pipeline(c);
    FAIL("expected a failure");
  } catch (const PipelineError& e) {
    CHECK(e.stage() == "sample");
    const auto m = read_json_file(e.manifest_path());
    REQUIRE(m["stages"].size() == 2);
    CHECK(m["stages"][0]["stage"] == "facets");
    CHECK(m["stages"][0]["status"] == "ok");
    CHECK(m["stages"][1]["status"] == "failed");
    CHECK(m["stages"][1]["error"].is_string());
  }
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(pipeline_settings(Config::parse("n_sample = 5\n")), ConfigError);
  CHECK_THROWS_AS(pipeline_settings(Config::parse("models = pguess,nn9\n")), ConfigError);
  CHECK_THROWS_AS(pipeline_settings(Config::parse("lr_schedule = weekly\n")), ConfigError);
  CHECK_THROWS_AS(pipeline_settings(Config::parse("guessed_setting = 3\n")), ConfigError);
  const auto s = pipeline_settings(Config::parse("lr_schedule = shifted\nnn2_trunk = 32\n"));
  CHECK(s.train.decay_epochs == nn::TrainConfig::shifted_decay_epochs());
  CHECK(s.network_spec(nn::ModelKind::nn2).trunk.size() == 1);
  CHECK(s.split_seed() != s.train_seed(nn::ModelKind::pguess));
}

TEST_CASE("inequality JSON") {
  const auto ch = canonical_chsh(Scenario(2, 2));
  const auto back = inequality_from_json(to_json(ch));
  CHECK(back.h == ch.h);
  CHECK(back.c == ch.c);
  CHECK_THROWS(inequality_from_json({{"scenario", {2, 2}}, {"h", {1.0}}, {"c", 0.0}}));
}
