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

#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

#include "dibell/sampler.hpp"

namespace dibell {

namespace {
constexpr const char* kCanonicalization =
    "h projected orthogonally to the normalization and no-signaling identities, "
    "scaled to max|h_i| = 1, c = max over local vertices";
}

nlohmann::json to_json(const LabeledRecord& r) {
  return {
      {"scenario", {r.scenario.m(), r.scenario.k()}},
      {"p", r.p},
      {"h", r.h},
      {"c", r.c},
      {"bell_value", r.bell_value},
      {"p_guess", r.p_guess},
      {"facet_class", r.facet_class},
      {"seed", r.seed},
  };
}

LabeledRecord record_from_json(const nlohmann::json& j) {
  LabeledRecord r;
  const auto sc = j.at("scenario");
  r.scenario = Scenario(sc.at(0).get<int>(), sc.at(1).get<int>());
  r.p = j.at("p").get<std::vector<double>>();
  r.h = j.at("h").get<std::vector<double>>();
  r.c = j.at("c").get<double>();
  r.bell_value = j.at("bell_value").get<double>();
  r.p_guess = j.at("p_guess").get<double>();
  r.facet_class = j.at("facet_class").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  if (r.p.size() != r.scenario.dim() || r.h.size() != r.scenario.dim()) {
    throw std::invalid_argument("record vectors do not match the scenario dimension");
  }
  Behavior check(r.scenario, r.p);  // validity
  return r;
}

nlohmann::json dataset_header(const SamplerConfig& config, const DatasetStats& stats,
                              const nlohmann::json& provenance) {
  nlohmann::json h = {
      {"format_version", kDatasetFormatVersion},
      {"master_seed", config.master_seed},
      {"config",
       {
           {"scenario", {config.scenario.m(), config.scenario.k()}},
           {"n_samples", config.n_samples},
           {"master_seed", config.master_seed},
           {"q2_filter", config.q2_filter},
           {"guessed_setting", config.guessed_setting},
           {"max_failure_rate", config.max_failure_rate},
           {"max_attempts", config.max_attempts},
       }},
      {"canonicalization", kCanonicalization},
      {"stats",
       {
           {"attempts", stats.attempts},
           {"accepted", stats.accepted},
           {"q2_rejected", stats.q2_rejected},
           {"local", stats.local},
           {"sdp_infeasible", stats.sdp_infeasible},
           {"solver_failures", stats.solver_failures},
           {"q2_acceptance_rate", stats.q2_acceptance_rate()},
       }},
  };
  if (!provenance.is_null()) h["run"] = provenance;
  return h;
}

void write_dataset(std::ostream& out, const Dataset& dataset) {
  out << dataset_header(dataset.config, dataset.stats, dataset.provenance).dump() << '\n';
  for (const auto& r : dataset.records) out << to_json(r).dump() << '\n';
  if (!out) throw std::runtime_error("dataset write failed");
}

void write_dataset(const std::string& path, const Dataset& dataset) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error(fmt::format("cannot open {} for writing", path));
  write_dataset(f, dataset);
}

Dataset read_dataset(std::istream& in) {
  Dataset d;
  std::string line;
  bool header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(fmt::format("dataset line {}: {}", lineno, e.what()));
    }
    if (!header) {
      header = true;
      if (j.contains("format_version")) {
        if (j.at("format_version").get<int>() != kDatasetFormatVersion) {
          throw std::runtime_error("unsupported dataset format version");
        }
        const auto& c = j.at("config");
        d.config.scenario = Scenario(c.at("scenario").at(0).get<int>(),
                                     c.at("scenario").at(1).get<int>());
        d.config.n_samples = c.value("n_samples", std::size_t{0});
        d.config.master_seed = c.value("master_seed", std::uint64_t{0});
        d.config.q2_filter = c.value("q2_filter", true);
        d.config.guessed_setting = c.value("guessed_setting", 1);
        d.config.max_failure_rate = c.value("max_failure_rate", 0.05);
        d.config.max_attempts = c.value("max_attempts", 1000);
        if (j.contains("stats")) {
          const auto& s = j.at("stats");
          d.stats.attempts = s.value("attempts", std::size_t{0});
          d.stats.accepted = s.value("accepted", std::size_t{0});
          d.stats.q2_rejected = s.value("q2_rejected", std::size_t{0});
          d.stats.local = s.value("local", std::size_t{0});
          d.stats.sdp_infeasible = s.value("sdp_infeasible", std::size_t{0});
          d.stats.solver_failures = s.value("solver_failures", std::size_t{0});
        }
        if (j.contains("run")) d.provenance = j.at("run");
        continue;
      }
    }
    try {
      d.records.push_back(record_from_json(j));
    } catch (const std::exception& e) {
      throw std::runtime_error(fmt::format("dataset line {}: {}", lineno, e.what()));
    }
  }
  if (!d.records.empty()) d.config.scenario = d.records.front().scenario;
  return d;
}

Dataset read_dataset(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error(fmt::format("cannot open {}", path));
  return read_dataset(f);
}

}  // namespace dibell
