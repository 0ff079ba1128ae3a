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
#include <istream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dibell/scenario.hpp"

namespace dibell {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Flat key=value configuration.
///
///   # comment
///   scenario = 2,2
///   n_samples = 1000
///
/// Keys are [a-z0-9_]+, values run to the end of the line (trimmed). A key
/// may appear once per file. Lists are comma separated.
class Config {
 public:
  Config() = default;

  static Config parse(std::istream& in, const std::string& source = "<config>");
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  /// Later values win.
  void merge(const Config& other);

  std::string get(const std::string& key, const std::string& fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  std::uint64_t get_uint64(const std::string& key, std::uint64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback) const;
  std::vector<std::string> get_list(const std::string& key,
                                    const std::vector<std::string>& fallback) const;
  /// "m,k".
  Scenario get_scenario(const std::string& key, const Scenario& fallback) const;

  /// Throws ConfigError naming the first key not in `known`.
  void require_known(const std::vector<std::string>& known) const;

  const std::map<std::string, std::string>& entries() const { return values_; }

  /// Sorted key = value lines; the canonical form that is hashed.
  std::string to_text() const;
  nlohmann::json to_json() const;
  /// FNV-1a 64 of to_text(), 16 hex digits.
  std::string hash() const;

 private:
  std::map<std::string, std::string> values_;
};

/// {"config": {...}, "config_hash": "..."} stamped on every artifact.
nlohmann::json provenance(const Config& config);

}  // namespace dibell
