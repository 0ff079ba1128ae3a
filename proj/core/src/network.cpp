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

#include "dibell/network.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

namespace dibell::nn {

const char* to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::linear: return "linear";
  }
  return "unknown";
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "linear") return Activation::linear;
  throw std::invalid_argument(fmt::format("unknown activation '{}'", s));
}

const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::pguess: return "pguess";
    case ModelKind::nn1: return "nn1";
    case ModelKind::nn2: return "nn2";
  }
  return "unknown";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "pguess") return ModelKind::pguess;
  if (s == "nn1") return ModelKind::nn1;
  if (s == "nn2") return ModelKind::nn2;
  throw std::invalid_argument(fmt::format("unknown model kind '{}' (pguess, nn1, nn2)", s));
}

void NetworkSpec::validate() const {
  if (input_width < 1) throw std::invalid_argument("input width must be positive");
  if (trunk.empty()) throw std::invalid_argument("network needs at least one trunk layer");
  auto check = [](const std::vector<LayerSpec>& layers, const char* what) {
    for (const auto& l : layers) {
      if (l.width < 1) throw std::invalid_argument(fmt::format("{} layer width < 1", what));
    }
  };
  check(trunk, "trunk");
  check(branch_bell, "bell branch");
  check(branch_pg, "p_guess branch");
  if (kind != ModelKind::nn2 && (!branch_bell.empty() || !branch_pg.empty())) {
    throw std::invalid_argument("only nn2 has branches");
  }
}

NetworkSpec NetworkSpec::defaults(ModelKind kind, const Scenario& scenario) {
  NetworkSpec s;
  s.kind = kind;
  s.input_width = static_cast<int>(scenario.dim());
  if (kind == ModelKind::nn2) {
    s.trunk = {{256, Activation::relu}, {256, Activation::relu}};
    s.branch_bell = {{128, Activation::relu}, {64, Activation::relu}};
    s.branch_pg = {{128, Activation::relu}, {64, Activation::relu}};
  } else {
    s.trunk = {{256, Activation::relu}, {256, Activation::relu}, {128, Activation::relu}};
  }
  return s;
}

namespace {

double normal(std::mt19937_64& rng) {
  // Box-Muller on our own uniforms keeps initialization portable.
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Dense make_layer(int in, int out, Activation act, std::mt19937_64& rng) {
  Dense d;
  d.activation = act;
  d.tail_activation = act;
  d.w.resize(out, in);
  d.b = Eigen::VectorXd::Zero(out);
  const double std_dev = act == Activation::relu ? std::sqrt(2.0 / in)
                                                 : std::sqrt(2.0 / (in + out));
  for (Eigen::Index j = 0; j < d.w.cols(); ++j) {
    for (Eigen::Index i = 0; i < d.w.rows(); ++i) d.w(i, j) = std_dev * normal(rng);
  }
  return d;
}

template <typename Block>
void apply_activation(Activation a, Block&& z) {
  switch (a) {
    case Activation::relu: z = z.cwiseMax(0.0); break;
    case Activation::sigmoid: z = (1.0 + (-z.array()).exp()).inverse().matrix(); break;
    case Activation::linear: break;
  }
}

// delta *= act'(.) given the activated output.
template <typename Block, typename OutBlock>
void apply_derivative(Activation a, Block&& delta, const OutBlock& out) {
  switch (a) {
    case Activation::relu:
      delta.array() = (out.array() > 0.0).select(delta.array(), 0.0);
      break;
    case Activation::sigmoid:
      delta.array() *= out.array() * (1.0 - out.array());
      break;
    case Activation::linear: break;
  }
}

void activate(const Dense& l, Eigen::MatrixXd& z) {
  const Eigen::Index rows = z.rows();
  const Eigen::Index split = std::min<Eigen::Index>(l.tail_from, rows);
  if (split > 0) apply_activation(l.activation, z.topRows(split));
  if (split < rows) apply_activation(l.tail_activation, z.bottomRows(rows - split));
}

void differentiate(const Dense& l, Eigen::MatrixXd& delta, const Eigen::MatrixXd& out) {
  const Eigen::Index rows = delta.rows();
  const Eigen::Index split = std::min<Eigen::Index>(l.tail_from, rows);
  if (split > 0) apply_derivative(l.activation, delta.topRows(split), out.topRows(split));
  if (split < rows) {
    apply_derivative(l.tail_activation, delta.bottomRows(rows - split),
                     out.bottomRows(rows - split));
  }
}

}  // namespace

Network::Network(const NetworkSpec& spec, std::uint64_t seed) : spec_(spec), seed_(seed) {
  spec_.validate();
  std::mt19937_64 rng(seed);
  int width = spec_.input_width;
  for (const auto& l : spec_.trunk) {
    layers_.push_back(make_layer(width, l.width, l.activation, rng));
    width = l.width;
  }
  trunk_count_ = layers_.size();
  const int trunk_width = width;
  const int dim = spec_.input_width;

  auto add_head = [&](const std::vector<LayerSpec>& hidden, int out, Activation act) {
    Head h{layers_.size(), 0};
    int w = trunk_width;
    for (const auto& l : hidden) {
      layers_.push_back(make_layer(w, l.width, l.activation, rng));
      w = l.width;
    }
    layers_.push_back(make_layer(w, out, act, rng));
    h.count = layers_.size() - h.first;
    heads_.push_back(h);
  };

  switch (spec_.kind) {
    case ModelKind::pguess:
      add_head({}, 1, Activation::sigmoid);
      break;
    case ModelKind::nn1: {
      add_head({}, dim + 1, Activation::linear);
      Dense& out = layers_.back();
      // Xavier scale is shared; only the last neuron is squashed.
      out.tail_activation = Activation::sigmoid;
      out.tail_from = dim;
      break;
    }
    case ModelKind::nn2:
      add_head(spec_.branch_bell, dim, Activation::linear);
      add_head(spec_.branch_pg, 1, Activation::sigmoid);
      break;
  }
}

std::size_t Network::num_parameters() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.w.size() + l.b.size());
  return n;
}

void Network::forward_tape(const Eigen::MatrixXd& inputs, Tape& tape) const {
  if (inputs.rows() != spec_.input_width) {
    throw std::invalid_argument(fmt::format("input width {} does not match network input {}",
                                            inputs.rows(), spec_.input_width));
  }
  tape.pre.resize(layers_.size());
  tape.out.resize(layers_.size());
  auto run = [&](std::size_t i, const Eigen::MatrixXd& x) {
    const Dense& l = layers_[i];
    tape.pre[i].noalias() = l.w * x;
    tape.pre[i].colwise() += l.b;
    tape.out[i] = tape.pre[i];
    activate(l, tape.out[i]);
  };
  for (std::size_t i = 0; i < trunk_count_; ++i) {
    run(i, i == 0 ? inputs : tape.out[i - 1]);
  }
  const Eigen::MatrixXd& trunk_out = tape.out[trunk_count_ - 1];
  for (const Head& h : heads_) {
    for (std::size_t t = 0; t < h.count; ++t) {
      const std::size_t i = h.first + t;
      run(i, t == 0 ? trunk_out : tape.out[i - 1]);
    }
  }
}

Eigen::MatrixXd Network::assemble(const Tape& tape) const {
  if (heads_.size() == 1) return tape.out[heads_[0].first + heads_[0].count - 1];
  Eigen::Index rows = 0;
  for (const Head& h : heads_) rows += layers_[h.first + h.count - 1].outputs();
  const Eigen::Index cols = tape.out.back().cols();
  Eigen::MatrixXd out(rows, cols);
  Eigen::Index r = 0;
  for (const Head& h : heads_) {
    const auto& o = tape.out[h.first + h.count - 1];
    out.middleRows(r, o.rows()) = o;
    r += o.rows();
  }
  return out;
}

Eigen::MatrixXd Network::forward(const Eigen::MatrixXd& inputs) const {
  Tape tape;
  forward_tape(inputs, tape);
  return assemble(tape);
}

std::vector<double> Network::forward(const std::vector<double>& input) const {
  const Eigen::MatrixXd x =
      Eigen::Map<const Eigen::VectorXd>(input.data(), static_cast<Eigen::Index>(input.size()));
  const Eigen::MatrixXd y = forward(x);
  return {y.data(), y.data() + y.size()};
}

double Network::loss_terms(const Eigen::MatrixXd& out, const Eigen::MatrixXd& targets,
                           Eigen::MatrixXd* d_out) const {
  if (targets.rows() != out.rows() || targets.cols() != out.cols()) {
    throw std::invalid_argument(fmt::format("targets are {}x{}, outputs {}x{}", targets.rows(),
                                            targets.cols(), out.rows(), out.cols()));
  }
  const auto n = static_cast<double>(out.cols());
  const Eigen::MatrixXd diff = out - targets;
  const Eigen::Index bell = spec_.bell_width();
  // mean over samples of: mean squared Bell error + squared p_guess error.
  double loss = diff.bottomRows(1).squaredNorm() / n;
  if (bell > 0) loss += diff.topRows(bell).squaredNorm() / (n * static_cast<double>(bell));
  if (d_out != nullptr) {
    *d_out = (2.0 / n) * diff;
    if (bell > 0) d_out->topRows(bell) /= static_cast<double>(bell);
  }
  return loss;
}

double Network::loss(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets) const {
  return loss_terms(forward(inputs), targets, nullptr);
}

double Network::loss_and_gradient(const Eigen::MatrixXd& inputs,
                                  const Eigen::MatrixXd& targets, Gradients& grad) const {
  Tape tape;
  forward_tape(inputs, tape);
  Eigen::MatrixXd d_out;
  const double loss = loss_terms(assemble(tape), targets, &d_out);

  grad.w.resize(layers_.size());
  grad.b.resize(layers_.size());
  // delta holds dL/d(pre-activation) of layer i; returns dL/d(input).
  auto back = [&](std::size_t i, Eigen::MatrixXd delta, const Eigen::MatrixXd& x) {
    const Dense& l = layers_[i];
    differentiate(l, delta, tape.out[i]);
    grad.w[i].noalias() = delta * x.transpose();
    grad.b[i] = delta.rowwise().sum();
    Eigen::MatrixXd d_in;
    d_in.noalias() = l.w.transpose() * delta;
    return d_in;
  };

  const Eigen::MatrixXd& trunk_out = tape.out[trunk_count_ - 1];
  Eigen::MatrixXd d_trunk = Eigen::MatrixXd::Zero(trunk_out.rows(), trunk_out.cols());
  Eigen::Index row = 0;
  for (const Head& h : heads_) {
    const Eigen::Index width = layers_[h.first + h.count - 1].outputs();
    Eigen::MatrixXd d = d_out.middleRows(row, width);
    row += width;
    for (std::size_t t = h.count; t-- > 0;) {
      const std::size_t i = h.first + t;
      d = back(i, std::move(d), t == 0 ? trunk_out : tape.out[i - 1]);
    }
    d_trunk += d;
  }
  for (std::size_t i = trunk_count_; i-- > 0;) {
    d_trunk = back(i, std::move(d_trunk), i == 0 ? inputs : tape.out[i - 1]);
  }
  return loss;
}

namespace {

template <typename F>
auto locate(const std::vector<Dense>& layers, std::size_t i, F&& f) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto nw = static_cast<std::size_t>(layers[l].w.size());
    const auto nb = static_cast<std::size_t>(layers[l].b.size());
    if (i < nw) return f(l, true, i);
    i -= nw;
    if (i < nb) return f(l, false, i);
    i -= nb;
  }
  throw std::out_of_range("parameter index out of range");
}

}  // namespace

double Network::parameter(std::size_t i) const {
  return locate(layers_, i, [&](std::size_t l, bool is_w, std::size_t k) {
    return is_w ? layers_[l].w.data()[k] : layers_[l].b.data()[k];
  });
}

void Network::set_parameter(std::size_t i, double v) {
  locate(layers_, i, [&](std::size_t l, bool is_w, std::size_t k) {
    (is_w ? layers_[l].w.data()[k] : layers_[l].b.data()[k]) = v;
    return 0;
  });
}

double Network::gradient_entry(const Gradients& g, const std::vector<Dense>& layers,
                               std::size_t i) {
  return locate(layers, i, [&](std::size_t l, bool is_w, std::size_t k) {
    return is_w ? g.w[l].data()[k] : g.b[l].data()[k];
  });
}

Eigen::MatrixXd targets_of(ModelKind kind, const std::vector<LabeledRecord>& records) {
  if (records.empty()) return {};
  const auto dim = static_cast<Eigen::Index>(records.front().h.size());
  const Eigen::Index rows = kind == ModelKind::pguess ? 1 : dim + 1;
  Eigen::MatrixXd t(rows, static_cast<Eigen::Index>(records.size()));
  for (std::size_t s = 0; s < records.size(); ++s) {
    const auto col = static_cast<Eigen::Index>(s);
    if (kind != ModelKind::pguess) {
      for (Eigen::Index i = 0; i < dim; ++i) t(i, col) = records[s].h[static_cast<std::size_t>(i)];
    }
    t(rows - 1, col) = records[s].p_guess;
  }
  return t;
}

Eigen::MatrixXd inputs_of(const std::vector<LabeledRecord>& records) {
  if (records.empty()) return {};
  const auto dim = static_cast<Eigen::Index>(records.front().p.size());
  Eigen::MatrixXd x(dim, static_cast<Eigen::Index>(records.size()));
  for (std::size_t s = 0; s < records.size(); ++s) {
    x.col(static_cast<Eigen::Index>(s)) =
        Eigen::Map<const Eigen::VectorXd>(records[s].p.data(), dim);
  }
  return x;
}

GradientCheck gradient_check(Network& net, const Eigen::MatrixXd& inputs,
                             const Eigen::MatrixXd& targets, std::size_t max_params,
                             double step, std::uint64_t seed) {
  Gradients g;
  net.loss_and_gradient(inputs, targets, g);
  const std::size_t total = net.num_parameters();
  const auto order = seeded_permutation(total, seed);
  const std::size_t n = std::min(max_params, total);

  GradientCheck out;
  out.checked = n;
  double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t i = order[t];
    const double v = net.parameter(i);
    net.set_parameter(i, v + step);
    const double up = net.loss(inputs, targets);
    net.set_parameter(i, v - step);
    const double down = net.loss(inputs, targets);
    net.set_parameter(i, v);
    const double numeric = (up - down) / (2.0 * step);
    const double analytic = Network::gradient_entry(g, net.layers(), i);
    diff2 += (analytic - numeric) * (analytic - numeric);
    a2 += analytic * analytic;
    n2 += numeric * numeric;
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    out.max_entry_error = std::max(out.max_entry_error, std::abs(analytic - numeric) / scale);
  }
  const double denom = std::max(std::sqrt(std::max(a2, n2)), 1e-300);
  out.relative_error = std::sqrt(diff2) / denom;
  return out;
}

}  // namespace dibell::nn
