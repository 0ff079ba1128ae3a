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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "dibell/error.hpp"
#include "dibell/facets.hpp"
#include "dibell/network.hpp"

namespace dibell::nn {

double TrainConfig::learning_rate(int epoch) const {
  double lr = base_lr;
  for (int e : decay_epochs) {
    if (epoch >= e) lr *= lr_decay;
  }
  return lr;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be at least 1");
  if (!(base_lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (batch_size < 1) throw std::invalid_argument("batch size must be at least 1");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw std::invalid_argument("validation fraction must lie in [0,1)");
  }
}

namespace {

struct AdamState {
  std::vector<Eigen::MatrixXd> mw, vw;
  std::vector<Eigen::VectorXd> mb, vb;
  long step = 0;

  explicit AdamState(const std::vector<Dense>& layers) {
    for (const auto& l : layers) {
      mw.push_back(Eigen::MatrixXd::Zero(l.w.rows(), l.w.cols()));
      vw.push_back(Eigen::MatrixXd::Zero(l.w.rows(), l.w.cols()));
      mb.push_back(Eigen::VectorXd::Zero(l.b.size()));
      vb.push_back(Eigen::VectorXd::Zero(l.b.size()));
    }
  }
};

template <typename P, typename G>
void adam_update(P& param, const G& grad, P& m, P& v, double lr, double b1, double b2,
                 double c1, double c2, double eps) {
  m = b1 * m + (1.0 - b1) * grad;
  v.array() = b2 * v.array() + (1.0 - b2) * grad.array().square();
  param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

Eigen::MatrixXd columns(const Eigen::MatrixXd& m, const std::vector<std::size_t>& idx,
                        std::size_t begin, std::size_t end) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(end - begin));
  for (std::size_t i = begin; i < end; ++i) {
    out.col(static_cast<Eigen::Index>(i - begin)) = m.col(static_cast<Eigen::Index>(idx[i]));
  }
  return out;
}

}  // namespace

TrainHistory train(Network& net, const std::vector<LabeledRecord>& train_val,
                   const TrainConfig& config) {
  config.validate();
  if (train_val.empty()) throw std::invalid_argument("training set is empty");
  const ModelKind kind = net.spec().kind;
  const Eigen::MatrixXd x_all = inputs_of(train_val);
  const Eigen::MatrixXd y_all = targets_of(kind, train_val);

  const std::size_t n = train_val.size();
  auto n_val = static_cast<std::size_t>(
      std::floor(config.validation_fraction * static_cast<double>(n)));
  if (n_val >= n) n_val = 0;
  const auto split = seeded_permutation(n, mix64(config.seed ^ 0x76616c6964ULL));
  const std::vector<std::size_t> val_idx(split.begin(), split.begin() + static_cast<long>(n_val));
  const std::vector<std::size_t> train_idx(split.begin() + static_cast<long>(n_val), split.end());
  const Eigen::MatrixXd x_val = columns(x_all, val_idx, 0, n_val);
  const Eigen::MatrixXd y_val = columns(y_all, val_idx, 0, n_val);

  TrainHistory hist;
  AdamState adam(net.layers());
  Gradients g;
  const auto batch = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const double lr = config.learning_rate(epoch);
    const auto perm = seeded_permutation(train_idx.size(),
                                         mix64(config.seed + static_cast<std::uint64_t>(epoch)));
    std::vector<std::size_t> order(train_idx.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = train_idx[perm[i]];

    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const Eigen::MatrixXd xb = columns(x_all, order, start, end);
      const Eigen::MatrixXd yb = columns(y_all, order, start, end);
      const double loss = net.loss_and_gradient(xb, yb, g);
      if (!std::isfinite(loss)) {
        throw NumericalError(fmt::format("non-finite loss at epoch {}, batch starting {}",
                                         epoch, start));
      }
      total += loss * static_cast<double>(end - start);

      ++adam.step;
      const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(adam.step));
      const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(adam.step));
      auto& layers = net.layers();
      for (std::size_t l = 0; l < layers.size(); ++l) {
        adam_update(layers[l].w, g.w[l], adam.mw[l], adam.vw[l], lr, config.beta1,
                    config.beta2, c1, c2, config.epsilon);
        adam_update(layers[l].b, g.b[l], adam.mb[l], adam.vb[l], lr, config.beta1,
                    config.beta2, c1, c2, config.epsilon);
      }
    }
    hist.train_loss.push_back(total / static_cast<double>(order.size()));
    hist.learning_rate.push_back(lr);
    if (n_val > 0) hist.validation_loss.push_back(net.loss(x_val, y_val));
  }
  return hist;
}

MetricsReport evaluate(const Network& net, const std::vector<LabeledRecord>& test,
                       const EvaluateOptions& options) {
  if (test.empty()) throw std::invalid_argument("test set is empty");
  return evaluate_predictions(net.spec().kind, net.forward(inputs_of(test)), test, options);
}

MetricsReport evaluate_predictions(ModelKind kind, const Eigen::MatrixXd& pred,
                                   const std::vector<LabeledRecord>& test,
                                   const EvaluateOptions& options) {
  if (test.empty()) throw std::invalid_argument("test set is empty");
  const auto n = static_cast<Eigen::Index>(test.size());
  const Eigen::MatrixXd truth = targets_of(kind, test);
  if (pred.rows() != truth.rows() || pred.cols() != n) {
    throw std::invalid_argument(fmt::format("predictions are {}x{}, expected {}x{}", pred.rows(),
                                            pred.cols(), truth.rows(), n));
  }
  MetricsReport r;
  r.n_test = test.size();
  const Eigen::ArrayXXd diff = pred.array() - truth.array();
  const auto pg = diff.bottomRows(1);
  r.mae_pg = pg.abs().mean();
  r.mse_pg = pg.square().mean();
  if (kind == ModelKind::pguess) return r;

  const Eigen::Index dim = truth.rows() - 1;
  r.mae_h = diff.topRows(dim).abs().mean();
  r.mse_h = diff.topRows(dim).square().mean();
  if (!options.resolve) return r;

  const Scenario scenario = test.front().scenario;
  const LocalPolytope polytope(scenario);
  const MomentStructure moments(scenario, 2);
  std::vector<double> resolved(test.size(), std::numeric_limits<double>::quiet_NaN());

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next.fetch_add(1); i < test.size(); i = next.fetch_add(1)) {
      const auto col = static_cast<Eigen::Index>(i);
      BellInequality ineq{scenario, std::vector<double>(static_cast<std::size_t>(dim)), 0.0};
      for (Eigen::Index k = 0; k < dim; ++k) ineq.h[static_cast<std::size_t>(k)] = pred(k, col);
      ineq.c = polytope.classical_maximum(ineq.h);
      const Behavior b(scenario, test[i].p);
      try {
        const GuessingBound g =
            bound_guessing_probability(ineq.value(b), ineq, options.guessed_setting, moments);
        if (g.ok()) resolved[i] = g.p_guess;
      } catch (const std::invalid_argument&) {
        // constant predicted expression; counted as a failure
      }
    }
  };
  const int workers = std::max(1, options.threads);
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  double abs_sum = 0.0, sq_sum = 0.0;
  std::size_t below = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (std::isnan(resolved[i])) {
      ++r.resolve_failures;
      continue;
    }
    ++r.n_resolved;
    const double e = resolved[i] - test[i].p_guess;
    abs_sum += std::abs(e);
    sq_sum += e * e;
    if (resolved[i] < 1.0 - 1e-6) ++below;
  }
  if (r.n_resolved > 0) {
    const auto m = static_cast<double>(r.n_resolved);
    r.frac_pg_lt_1 = static_cast<double>(below) / m;
    r.mae_pg_via_predicted_ineq = abs_sum / m;
    r.mse_pg_via_predicted_ineq = sq_sum / m;
  }
  return r;
}

namespace {
nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}
double number_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.at(key).get<double>();
}
}  // namespace

nlohmann::json to_json(const MetricsReport& r) {
  return {
      {"mae_pg", number_or_null(r.mae_pg)},
      {"mse_pg", number_or_null(r.mse_pg)},
      {"mae_h", number_or_null(r.mae_h)},
      {"mse_h", number_or_null(r.mse_h)},
      {"frac_pg_lt_1", number_or_null(r.frac_pg_lt_1)},
      {"mae_pg_via_predicted_ineq", number_or_null(r.mae_pg_via_predicted_ineq)},
      {"mse_pg_via_predicted_ineq", number_or_null(r.mse_pg_via_predicted_ineq)},
      {"n_test", r.n_test},
      {"n_resolved", r.n_resolved},
      {"resolve_failures", r.resolve_failures},
  };
}

MetricsReport metrics_from_json(const nlohmann::json& j) {
  MetricsReport r;
  r.mae_pg = number_from(j, "mae_pg");
  r.mse_pg = number_from(j, "mse_pg");
  r.mae_h = number_from(j, "mae_h");
  r.mse_h = number_from(j, "mse_h");
  r.frac_pg_lt_1 = number_from(j, "frac_pg_lt_1");
  r.mae_pg_via_predicted_ineq = number_from(j, "mae_pg_via_predicted_ineq");
  r.mse_pg_via_predicted_ineq = number_from(j, "mse_pg_via_predicted_ineq");
  r.n_test = j.value("n_test", std::size_t{0});
  r.n_resolved = j.value("n_resolved", std::size_t{0});
  r.resolve_failures = j.value("resolve_failures", std::size_t{0});
  return r;
}

}  // namespace dibell::nn
