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

// dibell: command-line front end.
//
// Every option maps onto a config key (dashes become underscores), so
//   dibell sample --n-samples 500
// and a config file line `n_samples = 500` are interchangeable; flags win.
// The effective config is echoed into every artifact.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "dibell/bench.hpp"
#include "dibell/config.hpp"
#include "dibell/error.hpp"
#include "dibell/facets.hpp"
#include "dibell/network.hpp"
#include "dibell/npa.hpp"
#include "dibell/pipeline.hpp"
#include "dibell/sampler.hpp"
#include "dibell/scenario.hpp"
#include "dibell/sdp.hpp"
#include "dibell/separation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dibell;

namespace {

constexpr std::uint64_t kDefaultSeed = 20260101;

struct Context {
  Config config;

  std::uint64_t seed() const { return config.get_uint64("seed", kDefaultSeed); }
  int threads() const { return static_cast<int>(config.get_int("threads", 1)); }
  Scenario scenario() const { return config.get_scenario("scenario", Scenario(2, 2)); }

  // Output paths are relative to --out-dir.
  std::string output(const std::string& key, const std::string& fallback) const {
    const std::string name = config.get(key, fallback);
    if (name.empty() || name == "-") return name;
    fs::path p(name);
    if (p.is_relative() && config.has("out_dir")) p = fs::path(config.get("out_dir", ".")) / p;
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    return p.string();
  }

  std::string input(const std::string& key) const {
    if (!config.has(key)) throw ConfigError(fmt::format("--{} is required", dashed(key)));
    return config.get(key, "");
  }

  static std::string dashed(std::string key) {
    std::replace(key.begin(), key.end(), '_', '-');
    return key;
  }

  json stamp(json j) const {
    j["run"] = provenance(config);
    return j;
  }

  // JSON to a file, or stdout when the path is empty or "-".
  void emit(const std::string& key, const json& j) const {
    const std::string path = output(key, "");
    if (path.empty() || path == "-") {
      std::cout << j.dump(2) << '\n';
    } else {
      write_json_file(path, j);
      std::cerr << "wrote " << path << '\n';
    }
  }
};

std::vector<double> parse_numbers(const json& j) {
  return j.get<std::vector<double>>();
}

// {"scenario":[m,k],"p":[...]}, a dataset record, or a bare array with --scenario.
Behavior load_behavior(const Context& ctx, const std::string& path) {
  const json j = read_json_file(path);
  if (j.is_array()) return Behavior(ctx.scenario(), parse_numbers(j));
  const Scenario s = j.contains("scenario")
                         ? Scenario(j.at("scenario").at(0).get<int>(), j.at("scenario").at(1).get<int>())
                         : ctx.scenario();
  return Behavior(s, parse_numbers(j.at("p")));
}

// "chsh", "i3322" or a JSON file {scenario, h, c}.
BellInequality load_inequality(const std::string& spec, const Scenario& s) {
  if (spec == "chsh") return canonical_chsh(s);
  if (spec == "i3322") return canonical_i3322();
  return inequality_from_json(read_json_file(spec));
}

json lp_json(const LpSolution& lp) {
  return {{"status", to_string(lp.status)}, {"h", lp.h},
          {"c", lp.c},                      {"violation", lp.violation},
          {"lp_objective", lp.lp_objective}, {"duality_gap", lp.duality_gap}};
}

json bound_json(const GuessingBound& g) {
  json j = {{"status", sdp::to_string(g.status)}, {"gap", g.gap}, {"iterations", g.iterations}};
  j["p_guess"] = g.ok() ? json(g.p_guess) : json(nullptr);
  return j;
}

// Subcommands.

int cmd_vertices(const Context& ctx) {
  const Scenario s = ctx.scenario();
  json vs = json::array();
  for (const auto& v : enumerate_vertices(s)) {
    vs.push_back({{"alice", v.alice_map}, {"bob", v.bob_map}, {"p", v.behavior.vector()}});
  }
  ctx.emit("out", ctx.stamp({{"scenario", {s.m(), s.k()}}, {"count", vs.size()}, {"vertices", vs}}));
  return 0;
}

int cmd_facets(const Context& ctx) {
  const Scenario s = ctx.scenario();
  const LocalPolytope polytope(s);
  const auto facets = facet_inequalities(polytope);
  json fs_json = json::array();
  std::map<std::string, int> classes;
  for (const auto& f : facets) {
    fs_json.push_back(to_json(f));
    ++classes[f.facet_class];
  }
  ctx.emit("out", ctx.stamp({{"scenario", {s.m(), s.k()}},
                             {"n_vertices", polytope.vertices().size()},
                             {"count", facets.size()},
                             {"classes", classes},
                             {"facets", fs_json}}));
  return 0;
}

int cmd_separate(const Context& ctx) {
  const Behavior b = load_behavior(ctx, ctx.input("behavior"));
  const LocalPolytope polytope(b.scenario());
  const LpSolution lp = find_optimal_bell_inequality(b, polytope);
  json j = lp_json(lp);
  j["scenario"] = {b.scenario().m(), b.scenario().k()};
  ctx.emit("out", ctx.stamp(j));
  return 0;
}

int cmd_pguess(const Context& ctx) {
  const int setting = static_cast<int>(ctx.config.get_int("guessed_setting", 1));
  const int level = static_cast<int>(ctx.config.get_int("level", 2));
  const std::string ineq_spec = ctx.config.get("ineq", "optimal");
  json j;
  BellInequality ineq{ctx.scenario(), {}, 0.0};
  double value = 0.0;
  if (ctx.config.has("behavior")) {
    const Behavior b = load_behavior(ctx, ctx.input("behavior"));
    if (ineq_spec == "optimal") {
      const LocalPolytope polytope(b.scenario());
      const LpSolution lp = find_optimal_bell_inequality(b, polytope);
      j["lp"] = lp_json(lp);
      if (lp.status != LpStatus::optimal) {
        j["p_guess"] = 1.0;
        j["status"] = "local_behavior";
        ctx.emit("out", ctx.stamp(j));
        return 0;
      }
      ineq = BellInequality{b.scenario(), lp.h, lp.c};
    } else {
      ineq = load_inequality(ineq_spec, b.scenario());
    }
    value = ineq.value(b);
  } else {
    if (ineq_spec == "optimal") throw ConfigError("--ineq is required without --behavior");
    ineq = load_inequality(ineq_spec, ctx.scenario());
    value = ctx.config.get_double("value", std::numeric_limits<double>::quiet_NaN());
    if (std::isnan(value)) throw ConfigError("--value or --behavior is required");
  }
  const MomentStructure moments(ineq.scenario, level);
  const GuessingBound g = bound_guessing_probability(value, ineq, setting, moments);
  j.update(bound_json(g));
  j["bell_value"] = value;
  j["inequality"] = to_json(ineq);
  ctx.emit("out", ctx.stamp(j));
  return g.ok() ? 0 : 3;
}

int cmd_sample(const Context& ctx) {
  SamplerConfig sc;
  sc.scenario = ctx.scenario();
  sc.n_samples = static_cast<std::size_t>(ctx.config.get_int("n_samples", 1000));
  sc.master_seed = ctx.seed();
  sc.q2_filter = ctx.config.get_bool("q2_filter", true);
  sc.threads = ctx.threads();
  sc.guessed_setting = static_cast<int>(ctx.config.get_int("guessed_setting", 1));
  sc.max_failure_rate = ctx.config.get_double("max_failure_rate", 0.05);
  Dataset d = generate_dataset(sc);
  d.provenance = provenance(ctx.config);
  const std::string out = ctx.output("out", "dataset.jsonl");
  write_dataset(out, d);
  std::cerr << fmt::format("wrote {} records to {} ({} draws, Q2 acceptance {:.3f})\n",
                           d.records.size(), out, d.stats.attempts, d.stats.q2_acceptance_rate());
  return 0;
}

int cmd_split(const Context& ctx) {
  Dataset d = read_dataset(ctx.input("data"));
  const double fraction = ctx.config.get_double("train_fraction", 0.8);
  auto [train, test] = split_dataset(d.records, ctx.seed(), fraction);
  d.provenance = provenance(ctx.config);
  Dataset a{d.config, train, d.stats, d.provenance};
  Dataset b{d.config, test, d.stats, d.provenance};
  write_dataset(ctx.output("train_out", "train.jsonl"), a);
  write_dataset(ctx.output("test_out", "test.jsonl"), b);
  std::cerr << fmt::format("split {} records into {} train / {} test\n", d.records.size(),
                           train.size(), test.size());
  return 0;
}

int cmd_train(const Context& ctx) {
  const Dataset d = read_dataset(ctx.input("data"));
  if (d.records.empty()) throw ConfigError("training data is empty");
  // Reuse the pipeline's option parsing for architecture and schedule keys.
  Config pc;
  for (const auto& key : {"epochs", "batch_size", "learning_rate", "lr_schedule", "lr_decay",
                          "validation_fraction", "pguess_hidden", "nn1_hidden", "nn2_trunk",
                          "nn2_branches", "seed"}) {
    if (ctx.config.has(key)) pc.set(key, ctx.config.get(key, ""));
  }
  pc.set("scenario", fmt::format("{},{}", d.config.scenario.m(), d.config.scenario.k()));
  const PipelineSettings s = pipeline_settings(pc);
  const auto kind = nn::model_kind_from_string(ctx.config.get("model", "pguess"));

  nn::ModelFile m;
  m.network = nn::Network(s.network_spec(kind), s.init_seed(kind));
  m.train_config = s.train;
  m.train_config.seed = s.train_seed(kind);
  const auto h = nn::train(m.network, d.records, m.train_config);
  m.loss_history = h.train_loss;
  m.dataset_hash = nn::dataset_hash(d.records);
  m.provenance = provenance(ctx.config);
  m.provenance["validation_loss"] = h.validation_loss;
  const std::string out = ctx.output("out", fmt::format("model_{}.json", nn::to_string(kind)));
  nn::save_model(out, m);
  std::cerr << fmt::format("trained {} ({} parameters) for {} epochs, final loss {:.3e}; wrote {}\n",
                           nn::to_string(kind), m.network.num_parameters(), m.train_config.epochs,
                           h.train_loss.back(), out);
  return 0;
}

int cmd_predict(const Context& ctx) {
  const nn::ModelFile m = nn::load_model(ctx.input("model"));
  const Behavior b = load_behavior(ctx, ctx.input("behavior"));
  if (static_cast<int>(b.scenario().dim()) != m.network.spec().input_width) {
    throw ConfigError("behavior does not match the model's scenario");
  }
  const auto out = m.network.forward(b.vector());
  json j = {{"model", nn::to_string(m.network.spec().kind)}, {"p_guess", out.back()}};
  if (m.network.spec().kind != nn::ModelKind::pguess) {
    std::vector<double> h(out.begin(), out.end() - 1);
    const LocalPolytope polytope(b.scenario());
    const double c = polytope.classical_maximum(h);
    j["h"] = h;
    j["c"] = c;
    j["bell_value"] = dot(h, b.values());
  }
  ctx.emit("out", ctx.stamp(j));
  return 0;
}

int cmd_eval(const Context& ctx) {
  const nn::ModelFile m = nn::load_model(ctx.input("model"));
  const Dataset d = read_dataset(ctx.input("data"));
  nn::EvaluateOptions eo;
  eo.resolve = ctx.config.get_bool("resolve", true);
  eo.guessed_setting = static_cast<int>(ctx.config.get_int("guessed_setting", 1));
  eo.threads = ctx.threads();
  json j = nn::to_json(nn::evaluate(m.network, d.records, eo));
  j["model"] = nn::to_string(m.network.spec().kind);
  j["dataset_hash"] = nn::dataset_hash(d.records);
  ctx.emit("report", ctx.stamp(j));
  return 0;
}

int cmd_bench(const Context& ctx) {
  const nn::ModelFile m = nn::load_model(ctx.input("model"));
  const Dataset d = read_dataset(ctx.input("data"));
  const auto n = static_cast<std::size_t>(
      ctx.config.get_int("n", static_cast<long long>(std::min<std::size_t>(1000, d.records.size()))));
  const std::string task = ctx.config.get("task", "pguess");
  BenchOptions bo;
  bo.guessed_setting = static_cast<int>(ctx.config.get_int("guessed_setting", 1));
  bo.config = provenance(ctx.config);
  BenchReport r;
  if (task == "pguess") {
    r = bench_pguess(d.records, m.network, n, bo);
  } else if (task == "bell_lp") {
    r = bench_bell_lp(d.records, m.network, n, bo);
  } else {
    throw ConfigError("--task must be pguess or bell_lp");
  }
  std::cerr << fmt::format("{}: solver {:.3e} s/sample, network {:.3e} s/sample, speed-up {:.0f}x\n",
                           r.task, r.solver.mean, r.network.mean, r.speed_up);
  ctx.emit("report", to_json(r));
  return 0;
}

int cmd_pipeline(const Context& ctx) {
  Config c = ctx.config;
  // Drop CLI bookkeeping keys the pipeline does not know.
  Config filtered;
  for (const auto& [k, v] : c.entries()) {
    if (k != "config") filtered.set(k, v);
  }
  try {
    const PipelineResult r = run_pipeline(filtered);
    std::cerr << fmt::format("pipeline finished; artifacts in {}\n", r.out_dir);
    std::cout << r.report.dump(2) << '\n';
  } catch (const PipelineError& e) {
    std::cerr << "dibell: " << e.what() << "\n  manifest: " << e.manifest_path() << '\n';
    return 4;
  }
  return 0;
}

int cmd_npa_export(const Context& ctx) {
  const std::string format = ctx.config.get("format", "sdpa");
  if (format != "sdpa") throw ConfigError("only --format sdpa is supported");
  const int level = static_cast<int>(ctx.config.get_int("level", 2));
  const std::string problem = ctx.config.get("problem", "guessing");
  sdp::SdpProblem p;
  std::string comment;
  if (problem == "membership") {
    const Behavior b = load_behavior(ctx, ctx.input("behavior"));
    const MomentStructure moments(b.scenario(), level);
    p = membership_problem(b, moments);
    comment = fmt::format("Q{} membership, [{},{}]", level, b.scenario().m(), b.scenario().k());
  } else if (problem == "guessing") {
    const Scenario s = ctx.scenario();
    const BellInequality ineq = load_inequality(ctx.config.get("ineq", "chsh"), s);
    const double value = ctx.config.get_double("value", std::numeric_limits<double>::quiet_NaN());
    if (std::isnan(value)) throw ConfigError("--value is required for the guessing problem");
    const MomentStructure moments(ineq.scenario, level);
    const int setting = static_cast<int>(ctx.config.get_int("guessed_setting", 1));
    const GuessingProgram g = guessing_problem(value, ineq, setting, moments);
    p = g.sdp;
    comment = fmt::format("guessing probability, level {}, bell value {:.17g}, p_guess = {:.17g} - optimum",
                          level, value, g.offset);
  } else {
    throw ConfigError("--problem must be guessing or membership");
  }
  const std::string out = ctx.output("out", "-");
  std::ostringstream text;
  text << "\" " << comment << " (config " << ctx.config.hash() << ")\n";
  sdp::write_sdpa(p, text);
  if (out == "-") {
    std::cout << text.str();
  } else {
    std::ofstream f(out);
    f << text.str();
    if (!f) throw std::runtime_error(fmt::format("write to {} failed", out));
    std::cerr << "wrote " << out << '\n';
  }
  return 0;
}

// Copies every option given on the command line into the config.
void record_options(const CLI::App* app, Config& config) {
  for (const CLI::Option* opt : app->get_options()) {
    if (opt->count() == 0 || opt->get_lnames().empty()) continue;
    std::string key = opt->get_lnames().front();
    if (key == "help" || key == "config") continue;
    std::replace(key.begin(), key.end(), '-', '_');
    if (opt->get_expected_min() == 0) {
      config.set(key, "true");
      continue;
    }
    std::string value;
    for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
    config.set(key, value);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bell nonlocality, guessing-probability bounds and neural surrogates"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string sink, config_path;
  app.add_option("--seed", sink, "Master seed (default 20260101)");
  app.add_option("--threads", sink, "Worker threads for sampling and evaluation");
  app.add_option("--out-dir", sink, "Directory for relative output paths");
  app.add_option("--config", config_path, "key = value config file; flags override it");

  auto scenario = [&](CLI::App* sub) {
    sub->add_option("--scenario", sink, "Bell scenario m,k (default 2,2)");
  };
  auto out = [&](CLI::App* sub, const std::string& help) { sub->add_option("--out", sink, help); };

  std::map<CLI::App*, int (*)(const Context&)> handlers;

  auto* vertices = app.add_subcommand("vertices", "Deterministic local strategies");
  scenario(vertices);
  out(vertices, "Output JSON (default stdout)");
  handlers[vertices] = cmd_vertices;

  auto* facets = app.add_subcommand("facets", "Facet Bell inequalities of [2,2] or [3,2]");
  scenario(facets);
  out(facets, "Output JSON (default stdout)");
  handlers[facets] = cmd_facets;

  auto* separate = app.add_subcommand("separate", "Optimal separating Bell inequality (LP)");
  separate->add_option("--behavior", sink, "Behavior JSON");
  scenario(separate);
  out(separate, "Output JSON (default stdout)");
  handlers[separate] = cmd_separate;

  auto* pguess = app.add_subcommand("pguess", "Guessing-probability bound (NPA SDP)");
  pguess->add_option("--behavior", sink, "Behavior JSON; its Bell value is used");
  pguess->add_option("--ineq", sink, "optimal (LP), chsh, i3322 or an inequality JSON");
  pguess->add_option("--value", sink, "Bell value, when no behavior is given");
  pguess->add_option("--guessed-setting", sink, "Alice's setting Eve guesses (1-based)");
  pguess->add_option("--level", sink, "NPA level, 1 or 2 (default 2)");
  scenario(pguess);
  out(pguess, "Output JSON (default stdout)");
  handlers[pguess] = cmd_pguess;

  auto* sample = app.add_subcommand("sample", "Generate a labeled dataset (JSON lines)");
  scenario(sample);
  sample->add_option("--n-samples", sink, "Number of records (default 1000)");
  sample->add_option("--q2-filter", sink, "true/false (default true)");
  sample->add_option("--guessed-setting", sink, "Setting used for labels");
  sample->add_option("--max-failure-rate", sink, "Abort above this solver failure rate");
  out(sample, "Dataset path (default dataset.jsonl)");
  handlers[sample] = cmd_sample;

  auto* split = app.add_subcommand("split", "Seeded train/test split of a dataset");
  split->add_option("--data", sink, "Dataset");
  split->add_option("--train-fraction", sink, "Default 0.8");
  split->add_option("--train-out", sink, "Default train.jsonl");
  split->add_option("--test-out", sink, "Default test.jsonl");
  handlers[split] = cmd_split;

  auto* train = app.add_subcommand("train", "Train a surrogate model");
  train->add_option("--data", sink, "Training dataset");
  train->add_option("--model", sink, "pguess, nn1 or nn2");
  for (const char* k : {"--epochs", "--batch-size", "--learning-rate", "--lr-schedule", "--lr-decay",
                        "--validation-fraction", "--pguess-hidden", "--nn1-hidden", "--nn2-trunk",
                        "--nn2-branches"}) {
    train->add_option(k, sink);
  }
  out(train, "Model path (default model_<kind>.json)");
  handlers[train] = cmd_train;

  auto* predict = app.add_subcommand("predict", "Run a model on one behavior");
  predict->add_option("--model", sink, "Model file");
  predict->add_option("--behavior", sink, "Behavior JSON");
  scenario(predict);
  out(predict, "Output JSON (default stdout)");
  handlers[predict] = cmd_predict;

  auto* eval = app.add_subcommand("eval", "Metrics of a model on a test set");
  eval->add_option("--model", sink, "Model file");
  eval->add_option("--data", sink, "Test dataset");
  eval->add_option("--resolve", sink, "Re-solve the SDP with predicted inequalities (true/false)");
  eval->add_option("--guessed-setting", sink, "Setting for the re-solved bound");
  eval->add_option("--report", sink, "Report JSON (default stdout)");
  handlers[eval] = cmd_eval;

  auto* bench = app.add_subcommand("bench", "Per-sample runtime, solver versus network");
  bench->add_option("--model", sink, "Model file");
  bench->add_option("--data", sink, "Dataset");
  bench->add_option("--n", sink, "Samples (default min(1000, dataset))");
  bench->add_option("--task", sink, "pguess or bell_lp");
  bench->add_option("--guessed-setting", sink, "Setting for the solver path");
  bench->add_option("--report", sink, "Report JSON (default stdout)");
  handlers[bench] = cmd_bench;

  auto* pipeline = app.add_subcommand("pipeline", "Run facets, sample, split, train, eval and bench");
  std::string pipeline_config;
  pipeline->add_option("config", pipeline_config, "Config file (same as --config)");
  handlers[pipeline] = cmd_pipeline;

  auto* npa = app.add_subcommand("npa", "NPA problem utilities");
  npa->require_subcommand(1);
  auto* npa_export = npa->add_subcommand("export", "Write an SDP in SDPA sparse format");
  npa_export->add_option("--format", sink, "sdpa");
  npa_export->add_option("--problem", sink, "guessing (default) or membership");
  npa_export->add_option("--level", sink, "NPA level (default 2)");
  npa_export->add_option("--ineq", sink, "chsh, i3322 or an inequality JSON");
  npa_export->add_option("--value", sink, "Bell value (guessing)");
  npa_export->add_option("--guessed-setting", sink, "Alice's setting Eve guesses (guessing)");
  npa_export->add_option("--behavior", sink, "Behavior JSON (membership)");
  scenario(npa_export);
  out(npa_export, "Output file (default stdout)");
  handlers[npa_export] = cmd_npa_export;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    Context ctx;
    if (!pipeline_config.empty()) {
      if (!config_path.empty()) throw ConfigError("give the pipeline config once");
      config_path = pipeline_config;
    }
    if (!config_path.empty()) ctx.config = Config::load(config_path);
    Config flags;
    record_options(&app, flags);
    CLI::App* chosen = app.get_subcommands().front();
    record_options(chosen, flags);
    if (chosen == npa) {
      chosen = npa->get_subcommands().front();
      record_options(chosen, flags);
    }
    ctx.config.merge(flags);
    return handlers.at(chosen)(ctx);
  } catch (const std::exception& e) {
    std::cerr << "dibell: error: " << e.what() << '\n';
    return 1;
  }
}
