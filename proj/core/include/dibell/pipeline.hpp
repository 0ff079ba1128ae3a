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

#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dibell/bench.hpp"
#include "dibell/config.hpp"
#include "dibell/facets.hpp"
#include "dibell/network.hpp"

namespace dibell {

/// Everything run_pipeline reads from its config, with defaults applied.
struct PipelineSettings {
  Scenario scenario{2, 2};
  std::uint64_t seed = 20260101;
  std::size_t n_samples = 100000;
  int threads = 1;
  std::string out_dir = "pipeline_out";
  bool q2_filter = true;
  int guessed_setting = 1;
  double max_failure_rate = 0.05;
  double train_fraction = 0.8;
  std::vector<nn::ModelKind> models{nn::ModelKind::pguess, nn::ModelKind::nn1,
                                    nn::ModelKind::nn2};
  nn::TrainConfig train;  // seed is replaced per model
  std::vector<int> pguess_hidden{256, 256, 128};
  std::vector<int> nn1_hidden{256, 256, 128};
  std::vector<int> nn2_trunk{256, 256};
  std::vector<int> nn2_branches{128, 64};
  bool resolve = true;
  std::size_t bench_n = 10000;  // clipped to the test set

  /// Per-stage seeds derived from `seed`.
  std::uint64_t split_seed() const;
  std::uint64_t init_seed(nn::ModelKind kind) const;
  std::uint64_t train_seed(nn::ModelKind kind) const;

  nn::NetworkSpec network_spec(nn::ModelKind kind) const;
};

/// Keys accepted in a pipeline config file.
const std::vector<std::string>& pipeline_config_keys();

/// Throws ConfigError on unknown keys or bad values.
PipelineSettings pipeline_settings(const Config& config);

struct StageRecord {
  std::string stage;
  std::string status;  // "ok" or "failed"
  double seconds = 0.0;
  std::vector<std::string> artifacts;
  std::string error;
};

struct PipelineResult {
  std::string out_dir;
  std::vector<StageRecord> stages;
  nlohmann::json manifest;
  nlohmann::json report;  // metrics per model
  nlohmann::json bench;   // bench reports
};

/// A stage threw. The manifest on disk lists the artifacts written so far.
class PipelineError : public std::runtime_error {
 public:
  PipelineError(std::string stage, const std::string& what, std::string manifest_path)
      : std::runtime_error("pipeline stage '" + stage + "' failed: " + what),
        stage_(std::move(stage)),
        manifest_path_(std::move(manifest_path)) {}
  const std::string& stage() const { return stage_; }
  const std::string& manifest_path() const { return manifest_path_; }

 private:
  std::string stage_;
  std::string manifest_path_;
};

/// facets -> sample -> split -> train (each model) -> eval -> bench, writing
/// config.txt, facets.json, dataset.jsonl, train.jsonl, test.jsonl,
/// model_<kind>.json, report.json, bench.json and manifest.json to out_dir.
/// Everything except timing fields is a function of the config.
PipelineResult run_pipeline(const Config& config);
PipelineResult run_pipeline(const std::string& config_path);

nlohmann::json to_json(const BellInequality& ineq);
BellInequality inequality_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Facet& f);

/// Writes `j` followed by a newline; throws on I/O failure.
void write_json_file(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::string& path);

}  // namespace dibell
