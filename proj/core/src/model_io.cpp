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
#include <stdexcept>

#include <fmt/format.h>

#include "dibell/network.hpp"

namespace dibell::nn {

namespace {

constexpr const char* kModelFormat = "dibell-model";
constexpr int kModelVersion = 1;

nlohmann::json layers_json(const std::vector<LayerSpec>& layers) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& l : layers) a.push_back({{"width", l.width}, {"activation", to_string(l.activation)}});
  return a;
}

std::vector<LayerSpec> layers_from(const nlohmann::json& a) {
  std::vector<LayerSpec> out;
  for (const auto& l : a) {
    out.push_back({l.at("width").get<int>(),
                   activation_from_string(l.at("activation").get<std::string>())});
  }
  return out;
}

}  // namespace

nlohmann::json to_json(const ModelFile& m) {
  const NetworkSpec& s = m.network.spec();
  nlohmann::json layers = nlohmann::json::array();
  for (const Dense& d : m.network.layers()) {
    layers.push_back({
        {"rows", d.w.rows()},
        {"cols", d.w.cols()},
        {"w", std::vector<double>(d.w.data(), d.w.data() + d.w.size())},
        {"b", std::vector<double>(d.b.data(), d.b.data() + d.b.size())},
    });
  }
  const TrainConfig& t = m.train_config;
  nlohmann::json j = {
      {"format", kModelFormat},
      {"version", kModelVersion},
      {"spec",
       {
           {"kind", to_string(s.kind)},
           {"input_width", s.input_width},
           {"trunk", layers_json(s.trunk)},
           {"branch_bell", layers_json(s.branch_bell)},
           {"branch_pg", layers_json(s.branch_pg)},
           {"loss", "mean squared error; joint models add the Bell and p_guess terms unweighted"},
       }},
      {"seed", m.network.seed()},
      {"layers", layers},
      {"train_config",
       {
           {"epochs", t.epochs},
           {"base_lr", t.base_lr},
           {"decay_epochs", t.decay_epochs},
           {"lr_decay", t.lr_decay},
           {"batch_size", t.batch_size},
           {"seed", t.seed},
           {"validation_fraction", t.validation_fraction},
           {"beta1", t.beta1},
           {"beta2", t.beta2},
           {"epsilon", t.epsilon},
       }},
      {"dataset_hash", m.dataset_hash},
      {"loss_history", m.loss_history},
  };
  if (!m.provenance.is_null()) j["run"] = m.provenance;
  return j;
}

ModelFile model_from_json(const nlohmann::json& j) {
  if (j.value("format", std::string{}) != kModelFormat) {
    throw std::runtime_error("not a dibell model file");
  }
  if (j.at("version").get<int>() != kModelVersion) {
    throw std::runtime_error("unsupported model file version");
  }
  const auto& sj = j.at("spec");
  NetworkSpec spec;
  spec.kind = model_kind_from_string(sj.at("kind").get<std::string>());
  spec.input_width = sj.at("input_width").get<int>();
  spec.trunk = layers_from(sj.at("trunk"));
  spec.branch_bell = layers_from(sj.at("branch_bell"));
  spec.branch_pg = layers_from(sj.at("branch_pg"));

  ModelFile m;
  m.network = Network(spec, j.at("seed").get<std::uint64_t>());
  const auto& lj = j.at("layers");
  auto& layers = m.network.layers();
  if (lj.size() != layers.size()) throw std::runtime_error("model layer count mismatch");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto w = lj[i].at("w").get<std::vector<double>>();
    const auto b = lj[i].at("b").get<std::vector<double>>();
    if (lj[i].at("rows").get<Eigen::Index>() != layers[i].w.rows() ||
        lj[i].at("cols").get<Eigen::Index>() != layers[i].w.cols() ||
        w.size() != static_cast<std::size_t>(layers[i].w.size()) ||
        b.size() != static_cast<std::size_t>(layers[i].b.size())) {
      throw std::runtime_error(fmt::format("model layer {} has the wrong shape", i));
    }
    std::copy(w.begin(), w.end(), layers[i].w.data());
    std::copy(b.begin(), b.end(), layers[i].b.data());
  }
  if (j.contains("train_config")) {
    const auto& t = j.at("train_config");
    TrainConfig& c = m.train_config;
    c.epochs = t.value("epochs", c.epochs);
    c.base_lr = t.value("base_lr", c.base_lr);
    c.decay_epochs = t.value("decay_epochs", c.decay_epochs);
    c.lr_decay = t.value("lr_decay", c.lr_decay);
    c.batch_size = t.value("batch_size", c.batch_size);
    c.seed = t.value("seed", c.seed);
    c.validation_fraction = t.value("validation_fraction", c.validation_fraction);
    c.beta1 = t.value("beta1", c.beta1);
    c.beta2 = t.value("beta2", c.beta2);
    c.epsilon = t.value("epsilon", c.epsilon);
  }
  m.dataset_hash = j.value("dataset_hash", std::string{});
  m.loss_history = j.value("loss_history", std::vector<double>{});
  if (j.contains("run")) m.provenance = j.at("run");
  return m;
}

void save_model(const std::string& path, const ModelFile& m) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error(fmt::format("cannot open {} for writing", path));
  f << to_json(m).dump() << '\n';
  if (!f) throw std::runtime_error(fmt::format("write to {} failed", path));
}

ModelFile load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error(fmt::format("cannot open {}", path));
  return model_from_json(nlohmann::json::parse(f));
}

std::string dataset_hash(const std::vector<LabeledRecord>& records) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& r : records) {
    for (unsigned char ch : to_json(r).dump()) {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
  }
  return fmt::format("{:016x}", h);
}

}  // namespace dibell::nn
