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

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <random>

#include "dibell/network.hpp"
#include "dibell/separation.hpp"

using namespace dibell;
using namespace dibell::nn;

namespace {

NetworkSpec small_spec(ModelKind kind) {
  NetworkSpec s = NetworkSpec::defaults(kind, Scenario(2, 2));
  if (kind == ModelKind::nn2) {
    s.trunk = {{12, Activation::relu}, {10, Activation::relu}};
    s.branch_bell = {{8, Activation::relu}};
    s.branch_pg = {{6, Activation::relu}, {5, Activation::relu}};
  } else {
    s.trunk = {{12, Activation::relu}, {9, Activation::relu}};
  }
  return s;
}

// Synthetic records: random simplex-normalized inputs and smooth targets.
std::vector<LabeledRecord> synthetic(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<LabeledRecord> out(n);
  for (auto& r : out) {
    r.p.resize(16);
    r.h.resize(16);
    for (int block = 0; block < 4; ++block) {
      double s = 0.0;
      for (int i = 0; i < 4; ++i) s += (r.p[static_cast<std::size_t>(4 * block + i)] = u(rng));
      for (int i = 0; i < 4; ++i) r.p[static_cast<std::size_t>(4 * block + i)] /= s;
    }
    for (std::size_t i = 0; i < 16; ++i) r.h[i] = r.p[i] - r.p[15 - i];
    r.p_guess = 0.5 + 0.4 * r.p[0];
  }
  return out;
}

}  // namespace

TEST_CASE("default architectures") {
  const Scenario s(2, 2);
  const auto pg = NetworkSpec::defaults(ModelKind::pguess, s);
  CHECK(pg.output_width() == 1);
  CHECK(pg.trunk.size() == 3);
  const auto n1 = NetworkSpec::defaults(ModelKind::nn1, s);
  CHECK(n1.output_width() == 17);
  const auto n2 = NetworkSpec::defaults(ModelKind::nn2, s);
  CHECK(n2.trunk.size() == 2);
  CHECK(n2.branch_bell.size() == 2);
  CHECK(n2.branch_pg.size() == 2);
  NetworkSpec bad = pg;
  bad.trunk.clear();
  CHECK_THROWS(bad.validate());
  bad = pg;
  bad.trunk[0].width = 0;
  CHECK_THROWS(bad.validate());
  CHECK(model_kind_from_string("nn2") == ModelKind::nn2);
  CHECK_THROWS(model_kind_from_string("nn3"));
}

TEST_CASE("output ranges and layout") {
  const auto recs = synthetic(20, 1);
  for (auto kind : {ModelKind::pguess, ModelKind::nn1, ModelKind::nn2}) {
    const Network net(small_spec(kind), 5);
    const Eigen::MatrixXd out = net.forward(inputs_of(recs));
    CHECK(out.rows() == net.spec().output_width());
    CHECK(out.cols() == 20);
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      CHECK(out(out.rows() - 1, j) > 0.0);
      CHECK(out(out.rows() - 1, j) < 1.0);
      const auto v = net.forward(recs[static_cast<std::size_t>(j)].p);
      for (Eigen::Index i = 0; i < out.rows(); ++i)
        CHECK(v[static_cast<std::size_t>(i)] == doctest::Approx(out(i, j)).epsilon(1e-14));
    }
  }
}

TEST_CASE("property: analytic gradients match central differences") {
  const auto recs = synthetic(16, 2);
  for (auto kind : {ModelKind::pguess, ModelKind::nn1, ModelKind::nn2}) {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
      Network net(small_spec(kind), seed);
      const auto gc = gradient_check(net, inputs_of(recs), targets_of(kind, recs), 400, 1e-5, seed);
      CAPTURE(to_string(kind));
      CHECK(gc.checked > 0);
      CHECK(gc.relative_error < 1e-6);
    }
  }
}

TEST_CASE("learning rate schedule") {
  TrainConfig c;
  CHECK(c.learning_rate(1) == doctest::Approx(1e-3));
  CHECK(c.learning_rate(59) == doctest::Approx(1e-3));
  CHECK(c.learning_rate(60) == doctest::Approx(1e-4));
  CHECK(c.learning_rate(75) == doctest::Approx(1e-5));
  CHECK(c.learning_rate(100) == doctest::Approx(1e-8));
  c.decay_epochs = TrainConfig::shifted_decay_epochs();
  CHECK(c.learning_rate(50) == doctest::Approx(1e-3));
  CHECK(c.learning_rate(51) == doctest::Approx(1e-4));
  CHECK(c.learning_rate(91) == doctest::Approx(1e-8));
  c.epochs = 0;
  CHECK_THROWS(c.validate());
}

TEST_CASE("training fits a learnable target and is deterministic") {
  const auto recs = synthetic(400, 3);
  TrainConfig c;
  c.epochs = 40;
  c.batch_size = 32;
  c.base_lr = 3e-3;
  c.seed = 9;
  Network a(small_spec(ModelKind::nn2), 4), b(small_spec(ModelKind::nn2), 4);
  const auto ha = train(a, recs, c);
  const auto hb = train(b, recs, c);
  CHECK(ha.train_loss.size() == 40);
  CHECK(ha.validation_loss.size() == 40);
  CHECK(ha.train_loss.back() < 0.3 * ha.train_loss.front());
  CHECK(ha.train_loss == hb.train_loss);
  for (std::size_t i = 0; i < a.num_parameters(); ++i) REQUIRE(a.parameter(i) == b.parameter(i));
}

TEST_CASE("perfect predictions score zero") {
  const auto recs = synthetic(30, 4);
  const auto truth = targets_of(ModelKind::nn1, recs);
  EvaluateOptions eo;
  eo.resolve = false;
  const auto r = evaluate_predictions(ModelKind::nn1, truth, recs, eo);
  CHECK(r.mae_pg == 0.0);
  CHECK(r.mse_h == 0.0);
  CHECK(std::isnan(r.frac_pg_lt_1));
  CHECK_THROWS(evaluate_predictions(ModelKind::nn1, truth.topRows(3), recs, eo));
}

TEST_CASE("re-solving with the true inequalities reproduces labels") {
  SamplerConfig sc;
  sc.n_samples = 12;
  sc.master_seed = 3;
  const auto d = generate_dataset(sc);
  const auto truth = targets_of(ModelKind::nn2, d.records);
  const auto r = evaluate_predictions(ModelKind::nn2, truth, d.records);
  CHECK(r.n_resolved == 12);
  CHECK(r.resolve_failures == 0);
  CHECK(r.frac_pg_lt_1 == doctest::Approx(1.0));
  CHECK(r.mae_pg_via_predicted_ineq < 1e-6);
}

TEST_CASE("metrics JSON") {
  MetricsReport r;
  r.mae_pg = 0.1;
  r.mse_pg = 0.01;
  r.n_test = 3;
  const auto j = to_json(r);
  for (const char* k : {"mae_pg", "mse_pg", "mae_h", "mse_h", "frac_pg_lt_1",
                        "mae_pg_via_predicted_ineq", "mse_pg_via_predicted_ineq"})
    CHECK(j.contains(k));
  CHECK(j["mae_h"].is_null());
  const auto back = metrics_from_json(j);
  CHECK(back.mae_pg == 0.1);
  CHECK(std::isnan(back.mae_h));
}

TEST_CASE("model file round trip") {
  const auto recs = synthetic(50, 5);
  ModelFile m;
  m.network = Network(small_spec(ModelKind::nn1), 8);
  m.train_config.epochs = 2;
  m.loss_history = train(m.network, recs, m.train_config).train_loss;
  m.dataset_hash = dataset_hash(recs);
  m.provenance = {{"config_hash", "x"}};
  const auto path = (std::filesystem::temp_directory_path() / "dibell_model_test.json").string();
  save_model(path, m);
  const auto back = load_model(path);
  std::remove(path.c_str());
  CHECK(back.dataset_hash == m.dataset_hash);
  CHECK(back.loss_history == m.loss_history);
  CHECK(back.train_config.epochs == 2);
  CHECK(back.provenance == m.provenance);
  const Eigen::MatrixXd x = inputs_of(recs);
  CHECK((back.network.forward(x) - m.network.forward(x)).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS(model_from_json({{"format", "other"}}));
  CHECK(dataset_hash(recs) != dataset_hash(synthetic(50, 6)));
}
