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

#include "dibell/pipeline.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>

#include <fmt/format.h>

#include "dibell/sampler.hpp"

namespace dibell {

namespace fs = std::filesystem;

std::uint64_t PipelineSettings::split_seed() const { return mix64(seed ^ 0x73706c6974ULL); }

std::uint64_t PipelineSettings::init_seed(nn::ModelKind kind) const {
  return mix64(seed + 0x100 + static_cast<std::uint64_t>(kind));
}

std::uint64_t PipelineSettings::train_seed(nn::ModelKind kind) const {
  return mix64(seed + 0x200 + static_cast<std::uint64_t>(kind));
}

nn::NetworkSpec PipelineSettings::network_spec(nn::ModelKind kind) const {
  nn::NetworkSpec s = nn::NetworkSpec::defaults(kind, scenario);
  auto relu = [](const std::vector<int>& widths) {
    std::vector<nn::LayerSpec> out;
    for (int w : widths) out.push_back({w, nn::Activation::relu});
    return out;
  };
  switch (kind) {
    case nn::ModelKind::pguess: s.trunk = relu(pguess_hidden); break;
    case nn::ModelKind::nn1: s.trunk = relu(nn1_hidden); break;
    case nn::ModelKind::nn2:
      s.trunk = relu(nn2_trunk);
      s.branch_bell = relu(nn2_branches);
      s.branch_pg = relu(nn2_branches);
      break;
  }
  s.validate();
  return s;
}

const std::vector<std::string>& pipeline_config_keys() {
  static const std::vector<std::string> keys{
      "scenario",     "seed",          "n_samples",        "threads",
      "out_dir",      "q2_filter",     "guessed_setting",  "max_failure_rate",
      "train_fraction", "models",      "epochs",           "batch_size",
      "learning_rate", "lr_schedule",  "lr_decay",         "validation_fraction",
      "pguess_hidden", "nn1_hidden",   "nn2_trunk",        "nn2_branches",
      "resolve",      "bench_n"};
  return keys;
}

PipelineSettings pipeline_settings(const Config& c) {
  c.require_known(pipeline_config_keys());
  PipelineSettings s;
  s.scenario = c.get_scenario("scenario", s.scenario);
  s.seed = c.get_uint64("seed", s.seed);
  const long long n = c.get_int("n_samples", static_cast<long long>(s.n_samples));
  if (n < 10) throw ConfigError("n_samples must be at least 10");
  s.n_samples = static_cast<std::size_t>(n);
  s.threads = static_cast<int>(c.get_int("threads", s.threads));
  if (s.threads < 1) throw ConfigError("threads must be at least 1");
  s.out_dir = c.get("out_dir", s.out_dir);
  s.q2_filter = c.get_bool("q2_filter", s.q2_filter);
  s.guessed_setting = static_cast<int>(c.get_int("guessed_setting", s.guessed_setting));
  if (s.guessed_setting < 1 || s.guessed_setting > s.scenario.m()) {
    throw ConfigError("guessed_setting out of range");
  }
  s.max_failure_rate = c.get_double("max_failure_rate", s.max_failure_rate);
  s.train_fraction = c.get_double("train_fraction", s.train_fraction);
  if (!(s.train_fraction > 0.0 && s.train_fraction < 1.0)) {
    throw ConfigError("train_fraction must lie in (0,1)");
  }
  if (c.has("models")) {
    s.models.clear();
    for (const auto& m : c.get_list("models", {})) {
      try {
        s.models.push_back(nn::model_kind_from_string(m));
      } catch (const std::exception&) {
        throw ConfigError(fmt::format("unknown model '{}'", m));
      }
    }
  }
  s.train.epochs = static_cast<int>(c.get_int("epochs", s.train.epochs));
  s.train.batch_size = static_cast<int>(c.get_int("batch_size", s.train.batch_size));
  s.train.base_lr = c.get_double("learning_rate", s.train.base_lr);
  s.train.lr_decay = c.get_double("lr_decay", s.train.lr_decay);
  s.train.validation_fraction = c.get_double("validation_fraction", s.train.validation_fraction);
  const std::string schedule = c.get("lr_schedule", "default");
  if (schedule == "shifted") {
    s.train.decay_epochs = nn::TrainConfig::shifted_decay_epochs();
  } else if (schedule != "default") {
    throw ConfigError("lr_schedule must be 'default' or 'shifted'");
  }
  try {
    s.train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  s.pguess_hidden = c.get_int_list("pguess_hidden", s.pguess_hidden);
  s.nn1_hidden = c.get_int_list("nn1_hidden", s.nn1_hidden);
  s.nn2_trunk = c.get_int_list("nn2_trunk", s.nn2_trunk);
  s.nn2_branches = c.get_int_list("nn2_branches", s.nn2_branches);
  for (auto kind : s.models) {
    try {
      (void)s.network_spec(kind);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  s.resolve = c.get_bool("resolve", s.resolve);
  s.bench_n = static_cast<std::size_t>(c.get_int("bench_n", static_cast<long long>(s.bench_n)));
  return s;
}

nlohmann::json to_json(const BellInequality& ineq) {
  return {{"scenario", {ineq.scenario.m(), ineq.scenario.k()}}, {"h", ineq.h}, {"c", ineq.c}};
}

BellInequality inequality_from_json(const nlohmann::json& j) {
  const Scenario s(j.at("scenario").at(0).get<int>(), j.at("scenario").at(1).get<int>());
  BellInequality ineq{s, j.at("h").get<std::vector<double>>(), j.at("c").get<double>()};
  if (ineq.h.size() != s.dim()) throw std::invalid_argument("inequality length does not match scenario");
  return ineq;
}

nlohmann::json to_json(const Facet& f) {
  nlohmann::json j = to_json(f.inequality);
  j["class"] = f.facet_class;
  j["n_spanning"] = f.n_spanning;
  return j;
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error(fmt::format("cannot open {} for writing", path));
  f << j.dump(2) << '\n';
  if (!f) throw std::runtime_error(fmt::format("write to {} failed", path));
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error(fmt::format("cannot open {}", path));
  return nlohmann::json::parse(f);
}

namespace {

class Runner {
 public:
  Runner(const Config& config, const PipelineSettings& s) : config_(config), s_(s) {
    result_.out_dir = s.out_dir;
  }

  std::string path(const std::string& name) const { return (fs::path(s_.out_dir) / name).string(); }

  template <typename F>
  void stage(const std::string& name, F&& body) {
    StageRecord rec{name, "ok", 0.0, {}, {}};
    const auto t0 = std::chrono::steady_clock::now();
    try {
      rec.artifacts = body();
    } catch (const std::exception& e) {
      rec.status = "failed";
      rec.error = e.what();
      rec.seconds = elapsed(t0);
      result_.stages.push_back(rec);
      write_manifest();
      throw PipelineError(name, e.what(), path("manifest.json"));
    }
    rec.seconds = elapsed(t0);
    result_.stages.push_back(rec);
    write_manifest();
  }

  void write_manifest() {
    nlohmann::json stages = nlohmann::json::array();
    for (const auto& r : result_.stages) {
      nlohmann::json j = {{"stage", r.stage},
                          {"status", r.status},
                          {"seconds", r.seconds},
                          {"artifacts", r.artifacts}};
      if (!r.error.empty()) j["error"] = r.error;
      stages.push_back(j);
    }
    result_.manifest = stamp({{"stages", stages}});
    write_json_file(path("manifest.json"), result_.manifest);
  }

  nlohmann::json seeds() const {
    nlohmann::json j = {{"master", s_.seed}, {"split", s_.split_seed()}};
    for (auto k : s_.models) {
      j[fmt::format("init_{}", nn::to_string(k))] = s_.init_seed(k);
      j[fmt::format("train_{}", nn::to_string(k))] = s_.train_seed(k);
    }
    return j;
  }

  nlohmann::json stamp(nlohmann::json j) const {
    j["run"] = run_info();
    return j;
  }

  nlohmann::json run_info() const {
    nlohmann::json p = provenance(config_);
    p["seeds"] = seeds();
    return p;
  }

  PipelineResult& result() { return result_; }

 private:
  static double elapsed(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

  const Config& config_;
  const PipelineSettings& s_;
  PipelineResult result_;
};

}  // namespace

PipelineResult run_pipeline(const Config& config) {
  const PipelineSettings s = pipeline_settings(config);
  fs::create_directories(s.out_dir);
  Runner run(config, s);

  {
    std::ofstream f(run.path("config.txt"));
    f << "# config_hash = " << config.hash() << '\n' << config.to_text();
    if (!f) throw std::runtime_error("cannot write config.txt");
  }

  std::unique_ptr<SamplingContext> ctx;
  run.stage("facets", [&] {
    ctx = std::make_unique<SamplingContext>(s.scenario);
    nlohmann::json facets = nlohmann::json::array();
    for (const auto& fd : ctx->facets()) facets.push_back(to_json(fd.facet));
    write_json_file(run.path("facets.json"),
                    run.stamp({{"scenario", {s.scenario.m(), s.scenario.k()}},
                               {"n_vertices", ctx->polytope().vertices().size()},
                               {"facets", facets}}));
    return std::vector<std::string>{"config.txt", "facets.json"};
  });

  Dataset data;
  run.stage("sample", [&] {
    SamplerConfig sc;
    sc.scenario = s.scenario;
    sc.n_samples = s.n_samples;
    sc.master_seed = s.seed;
    sc.q2_filter = s.q2_filter;
    sc.threads = s.threads;
    sc.guessed_setting = s.guessed_setting;
    sc.max_failure_rate = s.max_failure_rate;
    data = generate_dataset(*ctx, sc);
    data.provenance = run.run_info();
    write_dataset(run.path("dataset.jsonl"), data);
    return std::vector<std::string>{"dataset.jsonl"};
  });

  std::vector<LabeledRecord> train_val, test;
  run.stage("split", [&] {
    std::tie(train_val, test) = split_dataset(data.records, s.split_seed(), s.train_fraction);
    Dataset a{data.config, train_val, data.stats, data.provenance};
    Dataset b{data.config, test, data.stats, data.provenance};
    write_dataset(run.path("train.jsonl"), a);
    write_dataset(run.path("test.jsonl"), b);
    return std::vector<std::string>{"train.jsonl", "test.jsonl"};
  });

  const std::string hash = nn::dataset_hash(train_val);
  std::vector<nn::ModelFile> models;
  for (auto kind : s.models) {
    const std::string name = fmt::format("model_{}.json", nn::to_string(kind));
    run.stage(fmt::format("train:{}", nn::to_string(kind)), [&] {
      nn::ModelFile m;
      m.network = nn::Network(s.network_spec(kind), s.init_seed(kind));
      m.train_config = s.train;
      m.train_config.seed = s.train_seed(kind);
      const nn::TrainHistory h = nn::train(m.network, train_val, m.train_config);
      m.loss_history = h.train_loss;
      m.dataset_hash = hash;
      m.provenance = run.run_info();
      m.provenance["validation_loss"] = h.validation_loss;
      nn::save_model(run.path(name), m);
      models.push_back(std::move(m));
      return std::vector<std::string>{name};
    });
  }

  run.stage("eval", [&] {
    nlohmann::json per_model = nlohmann::json::object();
    nn::EvaluateOptions eo;
    eo.resolve = s.resolve;
    eo.guessed_setting = s.guessed_setting;
    eo.threads = s.threads;
    for (const auto& m : models) {
      per_model[nn::to_string(m.network.spec().kind)] = nn::to_json(nn::evaluate(m.network, test, eo));
    }
    run.result().report = run.stamp({{"n_test", test.size()}, {"models", per_model}});
    write_json_file(run.path("report.json"), run.result().report);
    return std::vector<std::string>{"report.json"};
  });

  run.stage("bench", [&] {
    const std::size_t n = std::min(s.bench_n, test.size());
    BenchOptions bo;
    bo.guessed_setting = s.guessed_setting;
    bo.config = run.run_info();
    nlohmann::json b = nlohmann::json::object();
    const nn::ModelFile* pg = nullptr;
    const nn::ModelFile* bell = nullptr;
    for (const auto& m : models) {
      const auto k = m.network.spec().kind;
      if (k == nn::ModelKind::pguess || (!pg && k != nn::ModelKind::pguess)) pg = &m;
      if (k == nn::ModelKind::nn2 || (!bell && k == nn::ModelKind::nn1)) bell = &m;
    }
    if (n > 0 && pg) b["pguess"] = to_json(bench_pguess(test, pg->network, n, bo));
    if (n > 0 && bell) b["bell_lp"] = to_json(bench_bell_lp(test, bell->network, n, bo));
    run.result().bench = run.stamp(b);
    write_json_file(run.path("bench.json"), run.result().bench);
    return std::vector<std::string>{"bench.json"};
  });

  return run.result();
}

PipelineResult run_pipeline(const std::string& config_path) {
  return run_pipeline(Config::load(config_path));
}

}  // namespace dibell
