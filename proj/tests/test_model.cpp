// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "cscal/errors.hpp"
#include "cscal/grad_check.hpp"
#include "cscal/model.hpp"
#include "cscal/ops.hpp"
#include "support/oracles.hpp"

using namespace cscal;

TEST_CASE("init_params determinism, shapes, and bounds") {
  const MlpSpec spec{{2, 4, 2}};
  const ModelParams a = init_params(spec, 0);
  const ModelParams b = init_params(spec, 0);
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    CHECK(same_values(a.weights[l], b.weights[l]));
    CHECK(same_values(a.biases[l], b.biases[l]));
  }

  CHECK(a.weights[0].rows() == 2);
  CHECK(a.weights[0].cols() == 4);
  CHECK(a.weights[1].rows() == 4);
  CHECK(a.weights[1].cols() == 2);
  CHECK(a.biases[0].numel() == 4);
  CHECK(a.biases[1].numel() == 2);
  for (const Tensor& bias : a.biases) {
    for (std::size_t i = 0; i < bias.numel(); ++i) CHECK(bias[i] == 0.0);
  }

  const ModelParams c = init_params(spec, 1);
  CHECK(!same_values(a.weights[0], c.weights[0]));

  const MlpSpec wide{{6, 3}};
  const ModelParams w = init_params(wide, 9);
  const double bound = std::sqrt(6.0 / (6 + 3));
  for (std::size_t i = 0; i < w.weights[0].numel(); ++i) {
    CHECK(std::abs(w.weights[0][i]) <= bound);
  }

  CHECK_THROWS_AS(init_params(MlpSpec{{3}}, 0), ConfigError);
  CHECK_THROWS_AS(init_params(MlpSpec{{3, 0}}, 0), ConfigError);
}

TEST_CASE("extract: zero weights give zero features, identity gives relu") {
  Tape tape;
  MlpSpec spec{{2, 2}};
  ModelParams zero = init_params(spec, 0);
  for (Tensor* t : param_tensors(zero)) {
    for (std::size_t i = 0; i < t->numel(); ++i) (*t)[i] = 0.0;
  }
  const Tensor x = Tensor::from_rows({{1.5, -2.0}, {0.25, 3.0}});
  const Tensor f0 = extract(tape, zero, x);
  for (std::size_t i = 0; i < f0.numel(); ++i) CHECK(f0[i] == 0.0);

  ModelParams ident = zero;
  ident.weights[0] = Tensor::identity(2);
  const Tensor fi = extract(tape, ident, x);
  CHECK(fi.at(0, 0) == 1.5);
  CHECK(fi.at(0, 1) == 0.0);  // relu clips the negative coordinate
  CHECK(fi.at(1, 1) == 3.0);

  CHECK_THROWS_AS(extract(tape, ident, Tensor::zeros(2, 3)), ContractError);
}

TEST_CASE("extract gradient check on a random model") {
  CounterRng rng(31);
  const ModelParams g = init_params(MlpSpec{{3, 5, 4}}, 41);
  const Tensor x = test::random_matrix(rng, 4, 3);
  Tape tape;
  const Tensor f = extract(tape, bind(tape, g), x);
  CHECK(f.all_finite());

  const double err = grad_check(
      [&](Tape& t, const Tensor& v) { return sum(t, extract(t, g, v)); }, x, 1e-5);
  CHECK(err < 1e-5);
}

TEST_CASE("classify: uniform rows from zero logits, GRL path identity") {
  Tape tape;
  MlpSpec spec{{3, 4}};
  ModelParams c = init_params(spec, 0);
  for (Tensor* t : param_tensors(c)) {
    for (std::size_t i = 0; i < t->numel(); ++i) (*t)[i] = 0.0;
  }
  CounterRng rng(8);
  const Tensor f = test::random_matrix(rng, 5, 3);
  const Tensor uniform = classify(tape, c, f);
  for (std::size_t i = 0; i < uniform.numel(); ++i) {
    CHECK(uniform[i] == doctest::Approx(0.25).epsilon(1e-12));
  }

  const ModelParams real = init_params(spec, 77);
  const Tensor direct = classify(tape, real, f);
  const Tensor reversed = classify(tape, real, f, 0.7);
  CHECK(same_values(direct, reversed));  // bit-identical forward

  // Rows sum to one.
  for (std::size_t i = 0; i < direct.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < direct.cols(); ++j) s += direct.at(i, j);
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }

  CHECK_THROWS_AS(classify(tape, real, f, -1.0), ConfigError);
}

TEST_CASE("reverse_lambda 0 blocks the extractor gradient on that path") {
  CounterRng rng(19);
  const ModelParams g = init_params(MlpSpec{{2, 3}}, 1);
  const ModelParams c = init_params(MlpSpec{{3, 2}}, 2);
  const Tensor x = test::random_matrix(rng, 4, 2);

  Tape tape;
  const ModelParams bg = bind(tape, g);
  const ModelParams bc = bind(tape, c);
  const Tensor f = extract(tape, bg, x);
  const Tensor preds = classify(tape, bc, f, 0.0);
  // Weighted sum: a plain sum of softmax rows is constant and would zero
  // every gradient.
  const Tensor w = test::random_matrix(rng, 4, 2);
  const Gradients grads = tape.backward(sum(tape, mul(tape, preds, w)));
  for (const Tensor* p : param_tensors(bg)) {
    const Tensor& grad = grads.at(*p);
    for (std::size_t i = 0; i < grad.numel(); ++i) CHECK(grad[i] == 0.0);
  }
  // The classifier still receives gradients through the same path.
  double c_total = 0.0;
  for (const Tensor* p : param_tensors(bc)) {
    const Tensor& grad = grads.at(*p);
    for (std::size_t i = 0; i < grad.numel(); ++i) c_total += std::abs(grad[i]);
  }
  CHECK(c_total > 0.0);
}

TEST_CASE("checkpoint round trip is bit exact") {
  const ModelParams g = init_params(MlpSpec{{2, 8, 4}}, 5);
  const ModelParams c = init_params(MlpSpec{{4, 3}}, 6);
  const auto path = std::filesystem::temp_directory_path() / "cscal_test_checkpoint.json";
  save_checkpoint(path, g, c, 123, "deadbeefdeadbeef");

  const Checkpoint loaded = load_checkpoint(path);
  CHECK(loaded.seed == 123);
  CHECK(loaded.config_hash == "deadbeefdeadbeef");
  CHECK(loaded.g.spec.widths == g.spec.widths);
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    CHECK(same_values(loaded.g.weights[l], g.weights[l]));
    CHECK(same_values(loaded.g.biases[l], g.biases[l]));
  }
  for (std::size_t l = 0; l < c.weights.size(); ++l) {
    CHECK(same_values(loaded.c.weights[l], c.weights[l]));
  }
  std::filesystem::remove(path);

  CHECK_THROWS_AS(load_checkpoint("/nonexistent/checkpoint.json"), DataError);
}
