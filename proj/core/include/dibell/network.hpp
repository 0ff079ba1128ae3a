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
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "dibell/npa.hpp"
#include "dibell/sampler.hpp"
#include "dibell/scenario.hpp"

namespace dibell::nn {

enum class Activation { relu, sigmoid, linear };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct LayerSpec {
  int width = 1;
  Activation activation = Activation::relu;
};

/// pguess: trunk then one sigmoid output.
/// nn1: trunk then one output layer of width dim+1, linear on the dim Bell
///      coordinates and sigmoid on the last (p_guess) neuron.
/// nn2: trunk, then a Bell branch (hidden layers, dim linear outputs) and a
///      p_guess branch (hidden layers, one sigmoid output).
/// Outputs are laid out as [h_0 .. h_{dim-1}, p_guess] for nn1 and nn2.
enum class ModelKind { pguess, nn1, nn2 };

const char* to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

struct NetworkSpec {
  ModelKind kind = ModelKind::pguess;
  int input_width = 16;
  std::vector<LayerSpec> trunk;
  std::vector<LayerSpec> branch_bell;  // nn2 hidden layers
  std::vector<LayerSpec> branch_pg;    // nn2 hidden layers

  int bell_width() const { return kind == ModelKind::pguess ? 0 : input_width; }
  int output_width() const { return bell_width() + 1; }

  /// Throws std::invalid_argument on non-positive widths or empty trunks.
  void validate() const;

  /// Defaults: trunk [256,256,128] (pguess, nn1) or [256,256] with both
  /// branches [128,64] (nn2); relu hidden layers.
  static NetworkSpec defaults(ModelKind kind, const Scenario& scenario);
};

/// Dense layer y = act(W x + b). Neurons from `tail_from` on use
/// `tail_activation` (mixed output layer of nn1).
struct Dense {
  Eigen::MatrixXd w;  // out x in
  Eigen::VectorXd b;
  Activation activation = Activation::relu;
  Activation tail_activation = Activation::relu;
  int tail_from = std::numeric_limits<int>::max();

  int inputs() const { return static_cast<int>(w.cols()); }
  int outputs() const { return static_cast<int>(w.rows()); }
  Activation activation_of(int neuron) const {
    return neuron >= tail_from ? tail_activation : activation;
  }
};

/// Per-layer gradients, same layout as the network's layers.
struct Gradients {
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;
};

class Network {
 public:
  Network() = default;

  /// He-normal weights for relu layers, Xavier-normal otherwise; zero biases.
  Network(const NetworkSpec& spec, std::uint64_t seed);

  const NetworkSpec& spec() const { return spec_; }
  std::uint64_t seed() const { return seed_; }

  /// All layers: trunk, then each head's layers in order.
  std::vector<Dense>& layers() { return layers_; }
  const std::vector<Dense>& layers() const { return layers_; }
  std::size_t num_parameters() const;

  /// One column per sample.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& inputs) const;
  std::vector<double> forward(const std::vector<double>& input) const;

  /// Mean-squared-error loss of the model kind (sum of the Bell and p_guess
  /// terms for joint models) and its gradient over the batch.
  double loss(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets) const;
  double loss_and_gradient(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                           Gradients& grad) const;

  /// Flat parameter access (layer order, W column-major then b).
  double parameter(std::size_t i) const;
  void set_parameter(std::size_t i, double v);
  static double gradient_entry(const Gradients& g, const std::vector<Dense>& layers,
                               std::size_t i);

 private:
  struct Head {
    std::size_t first;  // index into layers_
    std::size_t count;
  };
  struct Tape {
    std::vector<Eigen::MatrixXd> pre;  // W x + b per layer
    std::vector<Eigen::MatrixXd> out;  // activations per layer
  };

  void forward_tape(const Eigen::MatrixXd& inputs, Tape& tape) const;
  Eigen::MatrixXd assemble(const Tape& tape) const;
  double loss_terms(const Eigen::MatrixXd& out, const Eigen::MatrixXd& targets,
                    Eigen::MatrixXd* d_out) const;

  NetworkSpec spec_;
  std::uint64_t seed_ = 0;
  std::vector<Dense> layers_;
  std::size_t trunk_count_ = 0;
  std::vector<Head> heads_;
};

/// Target matrix for a model kind: p_guess only, or [h; p_guess].
Eigen::MatrixXd targets_of(ModelKind kind, const std::vector<LabeledRecord>& records);
Eigen::MatrixXd inputs_of(const std::vector<LabeledRecord>& records);

struct GradientCheck {
  double relative_error = 0.0;      // ||analytic - numeric|| / max norm
  double max_entry_error = 0.0;     // worst per-parameter relative error
  std::size_t checked = 0;
};

/// Central differences on up to `max_params` randomly chosen parameters.
GradientCheck gradient_check(Network& net, const Eigen::MatrixXd& inputs,
                             const Eigen::MatrixXd& targets, std::size_t max_params = 1000,
                             double step = 1e-5, std::uint64_t seed = 1);

// Training.

struct TrainConfig {
  int epochs = 100;
  double base_lr = 1e-3;
  /// lr is multiplied by lr_decay at the start of each listed epoch
  /// (1-based). Default reading: 60, 70, 80, 90, 100.
  std::vector<int> decay_epochs{60, 70, 80, 90, 100};
  double lr_decay = 0.1;
  int batch_size = 128;
  std::uint64_t seed = 1;
  double validation_fraction = 0.125;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  /// The alternate reading of the schedule (decays at 51, 61, 71, 81, 91).
  static std::vector<int> shifted_decay_epochs() { return {51, 61, 71, 81, 91}; }

  double learning_rate(int epoch) const;
  void validate() const;
};

struct TrainHistory {
  std::vector<double> train_loss;       // mean batch loss per epoch
  std::vector<double> validation_loss;  // after each epoch; empty without validation
  std::vector<double> learning_rate;
};

/// ADAM on shuffled mini-batches. Deterministic for a given config seed.
/// Throws NumericalError on a non-finite loss.
TrainHistory train(Network& net, const std::vector<LabeledRecord>& train_val,
                   const TrainConfig& config);

// Evaluation.

struct MetricsReport {
  double mae_pg = 0.0;
  double mse_pg = 0.0;
  double mae_h = std::numeric_limits<double>::quiet_NaN();
  double mse_h = std::numeric_limits<double>::quiet_NaN();
  double frac_pg_lt_1 = std::numeric_limits<double>::quiet_NaN();
  double mae_pg_via_predicted_ineq = std::numeric_limits<double>::quiet_NaN();
  double mse_pg_via_predicted_ineq = std::numeric_limits<double>::quiet_NaN();
  std::size_t n_test = 0;
  std::size_t n_resolved = 0;
  std::size_t resolve_failures = 0;
};

struct EvaluateOptions {
  /// Re-solve the SDP with predicted inequalities (joint models only).
  bool resolve = true;
  int guessed_setting = 1;
  int threads = 1;
};

/// Metrics of a model on a test set. Predictions can be supplied instead of
/// a network (`predictions` columns in output layout).
MetricsReport evaluate(const Network& net, const std::vector<LabeledRecord>& test,
                       const EvaluateOptions& options = {});
MetricsReport evaluate_predictions(ModelKind kind, const Eigen::MatrixXd& predictions,
                                   const std::vector<LabeledRecord>& test,
                                   const EvaluateOptions& options = {});

nlohmann::json to_json(const MetricsReport& r);
MetricsReport metrics_from_json(const nlohmann::json& j);

// Model files (JSON).

struct ModelFile {
  Network network;
  TrainConfig train_config;
  std::string dataset_hash;
  std::vector<double> loss_history;
  nlohmann::json provenance;  // config echo; omitted when null
};

nlohmann::json to_json(const ModelFile& m);
ModelFile model_from_json(const nlohmann::json& j);
void save_model(const std::string& path, const ModelFile& m);
ModelFile load_model(const std::string& path);

/// FNV-1a over the serialized records; stamps models with their data.
std::string dataset_hash(const std::vector<LabeledRecord>& records);

}  // namespace dibell::nn
