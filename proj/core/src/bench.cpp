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

#include "dibell/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "dibell/error.hpp"
#include "dibell/separation.hpp"

namespace dibell {

namespace {

using Clock = std::chrono::steady_clock;

constexpr const char* kProtocol =
    "single thread; shared setup untimed; warm-up passes untimed; steady_clock per sample; "
    "solver failures excluded from solver timing";

MethodTiming summarize(std::string method, std::vector<double> t) {
  MethodTiming m;
  m.method = std::move(method);
  m.timed = t.size();
  if (t.empty()) return m;
  double sum = 0.0;
  for (double v : t) sum += v;
  m.mean = sum / static_cast<double>(t.size());
  double sq = 0.0;
  for (double v : t) sq += (v - m.mean) * (v - m.mean);
  m.stddev = t.size() > 1 ? std::sqrt(sq / static_cast<double>(t.size() - 1)) : 0.0;
  const std::size_t mid = t.size() / 2;
  std::nth_element(t.begin(), t.begin() + static_cast<long>(mid), t.end());
  m.median = t[mid];
  if (t.size() % 2 == 0) {
    m.median = 0.5 * (m.median + *std::max_element(t.begin(), t.begin() + static_cast<long>(mid)));
  }
  return m;
}

std::string hash_inputs(const std::vector<std::vector<double>>& inputs) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& p : inputs) {
    for (double v : p) {
      const auto* bytes = reinterpret_cast<const unsigned char*>(&v);
      for (std::size_t i = 0; i < sizeof(double); ++i) {
        h ^= bytes[i];
        h *= 0x100000001b3ULL;
      }
    }
  }
  return fmt::format("{:016x}", h);
}

// Runs `solve` and `predict` over the same behaviors. `solve` returns false on
// a solver failure.
BenchReport run(const std::string& task, const std::vector<LabeledRecord>& data,
                const nn::Network& model, std::size_t n, const BenchOptions& options,
                const std::function<bool(const Behavior&)>& solve, const std::string& solver_name) {
  if (n == 0) throw std::invalid_argument("benchmark needs at least one sample");
  if (n > data.size()) {
    throw std::invalid_argument(
        fmt::format("benchmark asks for {} samples but the dataset has {}", n, data.size()));
  }
  const Scenario scenario = data.front().scenario;
  if (model.spec().input_width != static_cast<int>(scenario.dim())) {
    throw std::invalid_argument("model input width does not match the dataset scenario");
  }

  std::vector<std::vector<double>> inputs;
  inputs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) inputs.push_back(data[i].p);
  std::vector<Behavior> behaviors;
  behaviors.reserve(n);
  for (const auto& p : inputs) behaviors.emplace_back(scenario, p);

  // Both paths read from `inputs`; the network sees exactly the solver's vectors.
  std::vector<std::vector<double>> seen_solver, seen_network;
  seen_solver.reserve(n);
  seen_network.reserve(n);

  const std::size_t warm = std::min(options.warmup, n);
  for (std::size_t i = 0; i < warm; ++i) {
    solve(behaviors[i]);
    (void)model.forward(inputs[i]);
  }

  BenchReport r;
  std::vector<double> t_solver, t_network;
  t_solver.reserve(n);
  t_network.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    seen_solver.push_back(behaviors[i].vector());
    const auto t0 = Clock::now();
    const bool ok = solve(behaviors[i]);
    const auto t1 = Clock::now();
    if (ok) {
      t_solver.push_back(std::chrono::duration<double>(t1 - t0).count());
    } else {
      ++r.solver_failures;
    }
  }
  volatile double sink = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    seen_network.push_back(inputs[i]);
    const auto t0 = Clock::now();
    const auto out = model.forward(inputs[i]);
    const auto t1 = Clock::now();
    sink = sink + out.back();
    t_network.push_back(std::chrono::duration<double>(t1 - t0).count());
  }

  const std::string hs = hash_inputs(seen_solver);
  if (hs != hash_inputs(seen_network)) {
    throw InvariantError("benchmark paths received different behavior vectors");
  }

  r.task = task;
  r.scenario = scenario;
  r.n = n;
  r.solver = summarize(solver_name, std::move(t_solver));
  r.network = summarize(fmt::format("network:{}", nn::to_string(model.spec().kind)),
                        std::move(t_network));
  r.speed_up = r.network.mean > 0.0 ? r.solver.mean / r.network.mean : 0.0;
  r.input_hash = hs;
  r.hardware = hardware_note();
  r.protocol = kProtocol;
  r.config = options.config;
  return r;
}

}  // namespace

BenchReport bench_pguess(const std::vector<LabeledRecord>& data, const nn::Network& model,
                         std::size_t n, const BenchOptions& options) {
  if (data.empty()) throw std::invalid_argument("benchmark dataset is empty");
  const Scenario scenario = data.front().scenario;
  const LocalPolytope polytope(scenario);
  const MomentStructure moments(scenario, 2);
  auto solve = [&](const Behavior& b) {
    const LpSolution lp = find_optimal_bell_inequality(b, polytope);
    if (lp.status != LpStatus::optimal) return false;
    const BellInequality ineq{scenario, lp.h, lp.c};
    try {
      return bound_guessing_probability(ineq.value(b), ineq, options.guessed_setting, moments).ok();
    } catch (const NumericalError&) {
      return false;
    }
  };
  return run("pguess", data, model, n, options, solve, "lp+sdp");
}

BenchReport bench_bell_lp(const std::vector<LabeledRecord>& data, const nn::Network& model,
                          std::size_t n, const BenchOptions& options) {
  if (data.empty()) throw std::invalid_argument("benchmark dataset is empty");
  const LocalPolytope polytope(data.front().scenario);
  auto solve = [&](const Behavior& b) {
    return find_optimal_bell_inequality(b, polytope).status == LpStatus::optimal;
  };
  return run("bell_lp", data, model, n, options, solve, "lp");
}

std::string hardware_note() {
  std::string cpu = "unknown cpu";
  std::ifstream f("/proc/cpuinfo");
  std::string line;
  while (std::getline(f, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) cpu = line.substr(colon + 2);
      break;
    }
  }
  return fmt::format("{}; {} hardware threads", cpu, std::thread::hardware_concurrency());
}

namespace {
nlohmann::json timing_json(const MethodTiming& m) {
  return {{"method", m.method}, {"mean_s", m.mean},       {"median_s", m.median},
          {"stddev_s", m.stddev}, {"timed", m.timed}};
}
MethodTiming timing_from(const nlohmann::json& j) {
  MethodTiming m;
  m.method = j.at("method").get<std::string>();
  m.mean = j.at("mean_s").get<double>();
  m.median = j.at("median_s").get<double>();
  m.stddev = j.at("stddev_s").get<double>();
  m.timed = j.at("timed").get<std::size_t>();
  return m;
}
}  // namespace

nlohmann::json to_json(const BenchReport& r) {
  return {
      {"task", r.task},
      {"scenario", {r.scenario.m(), r.scenario.k()}},
      {"n", r.n},
      {"solver", timing_json(r.solver)},
      {"network", timing_json(r.network)},
      {"speed_up", r.speed_up},
      {"solver_failures", r.solver_failures},
      {"input_hash", r.input_hash},
      {"hardware", r.hardware},
      {"protocol", r.protocol},
      {"config", r.config},
  };
}

BenchReport bench_report_from_json(const nlohmann::json& j) {
  BenchReport r;
  r.task = j.at("task").get<std::string>();
  r.scenario = Scenario(j.at("scenario").at(0).get<int>(), j.at("scenario").at(1).get<int>());
  r.n = j.at("n").get<std::size_t>();
  r.solver = timing_from(j.at("solver"));
  r.network = timing_from(j.at("network"));
  r.speed_up = j.at("speed_up").get<double>();
  r.solver_failures = j.at("solver_failures").get<std::size_t>();
  r.input_hash = j.at("input_hash").get<std::string>();
  r.hardware = j.at("hardware").get<std::string>();
  r.protocol = j.at("protocol").get<std::string>();
  r.config = j.value("config", nlohmann::json::object());
  return r;
}

}  // namespace dibell
