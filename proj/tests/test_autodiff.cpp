// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cscal/errors.hpp"
#include "cscal/grad_check.hpp"
#include "cscal/grad_suite.hpp"
#include "cscal/ops.hpp"
#include "cscal/svd.hpp"
#include "cscal/tape.hpp"
#include "support/oracles.hpp"

using namespace cscal;

TEST_CASE("matmul examples") {
  Tape tape;
  const Tensor a = Tensor::from_rows({{1, 2}, {3, 4}});
  CHECK(same_values(matmul(tape, Tensor::identity(2), a), a));

  const Tensor proj = Tensor::from_rows({{1, 0}, {0, 0}});
  const Tensor v = Tensor::from_rows({{5}, {7}});
  const Tensor got = matmul(tape, proj, v);
  CHECK(got.at(0, 0) == 5.0);
  CHECK(got.at(1, 0) == 0.0);
}

TEST_CASE("matmul gradient vs central differences") {
  CounterRng rng(11);
  const Tensor a = test::random_matrix(rng, 3, 4);
  const Tensor b = test::random_matrix(rng, 4, 2);
  const double err_a = grad_check(
      [&](Tape& t, const Tensor& x) { return sum(t, matmul(t, x, b)); }, a, 1e-5);
  const double err_b = grad_check(
      [&](Tape& t, const Tensor& x) { return sum(t, matmul(t, a, x)); }, b, 1e-5);
  CHECK(err_a < 1e-6);
  CHECK(err_b < 1e-6);
}

TEST_CASE("softmax examples and gradient") {
  Tape tape;
  const Tensor sym = softmax_rows(tape, Tensor::from_rows({{0, 0, 0}}));
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(sym.at(0, j) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }

  const Tensor big = softmax_rows(tape, Tensor::from_rows({{1000, 0}}));
  CHECK(big.all_finite());
  CHECK(big.at(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(big.at(0, 1) <= 1e-12);

  CounterRng rng(5);
  const Tensor logits = test::random_matrix(rng, 4, 5);
  const Tensor w = test::random_matrix(rng, 4, 5);
  const double err = grad_check(
      [&](Tape& t, const Tensor& x) { return sum(t, mul(t, softmax_rows(t, x), w)); }, logits, 1e-5);
  CHECK(err < 1e-6);
}

TEST_CASE("softmax rows sum to one and lie in (0,1)") {
  CounterRng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    Tape tape;
    const Tensor p = softmax_rows(tape, test::random_matrix(rng, 3, 4));
    for (std::size_t i = 0; i < 3; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < 4; ++j) {
        CHECK(p.at(i, j) > 0.0);
        CHECK(p.at(i, j) < 1.0);
        s += p.at(i, j);
      }
      CHECK(std::abs(s - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("nuclear norm examples") {
  Tape tape;
  CHECK(nuclear_norm(tape, Tensor::identity(3)).value() == doctest::Approx(3.0).epsilon(1e-12));

  // Every row uniform: rank one, single singular value sqrt(b/k).
  Tensor uniform = Tensor::zeros(4, 4);
  for (std::size_t i = 0; i < uniform.numel(); ++i) uniform[i] = 0.25;
  CHECK(nuclear_norm(tape, uniform).value() == doctest::Approx(1.0).epsilon(1e-12));
  const auto oracle = test::singular_values_oracle(uniform);
  double oracle_total = 0.0;
  for (double s : oracle) oracle_total += s;
  CHECK(nuclear_norm(tape, uniform).value() == doctest::Approx(oracle_total).epsilon(1e-9));

  Tensor perm = Tensor::zeros(4, 4);
  perm.at(0, 1) = perm.at(1, 3) = perm.at(2, 0) = perm.at(3, 2) = 1.0;
  CHECK(nuclear_norm(tape, perm).value() == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("nuclear norm gradient on well-separated spectra") {
  CounterRng rng(13);
  int done = 0;
  while (done < 5) {
    const Tensor m = test::random_matrix(rng, 5, 3);
    const auto sv = thin_svd(m).sigma;
    bool separated = true;
    for (std::size_t i = 0; i + 1 < sv.size(); ++i) {
      if (sv[i] - sv[i + 1] < 1e-3) separated = false;
    }
    if (!separated) continue;  // regenerate near-degenerate inputs
    const double err =
        grad_check([](Tape& t, const Tensor& x) { return nuclear_norm(t, x); }, m, 1e-5);
    CHECK(err < 1e-5);
    ++done;
  }
}

TEST_CASE("nuclear vs frobenius: envelope inequalities") {
  CounterRng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    Tape tape;
    const std::size_t b = 2 + rng.next_below(6);
    const std::size_t k = 2 + rng.next_below(4);
    const Tensor m = test::random_matrix(rng, b, k);
    const double nuc = nuclear_norm(tape, m).value();
    const double fro = frobenius_norm(m);
    CHECK(nuc >= fro - 1e-9);
    CHECK(nuc <= std::sqrt(static_cast<double>(std::min(b, k))) * fro + 1e-9);
  }

  // Equality exactly at rank <= 1, strict gap at rank 2.
  CounterRng rng2(18);
  for (int trial = 0; trial < 20; ++trial) {
    Tape tape;
    Tensor u = test::random_matrix(rng2, 4, 1);
    Tensor v = test::random_matrix(rng2, 1, 3);
    const Tensor rank1 = matmul_value(u, v);
    CHECK(nuclear_norm(tape, rank1).value() ==
          doctest::Approx(frobenius_norm(rank1)).epsilon(1e-9));

    Tensor rank2 = Tensor::zeros(4, 3);
    rank2.at(0, 0) = 2.0;
    rank2.at(1, 1) = 1.0;
    CHECK(nuclear_norm(tape, rank2).value() > frobenius_norm(rank2) + 1e-3);
  }
}

TEST_CASE("grl forward identity, reversed backward, composition") {
  Tape tape;
  const Tensor x = Tensor::vector({1, 2, 3});
  const Tensor leaf = tape.leaf(x);
  const Tensor y = grl(tape, leaf, 0.5);
  CHECK(same_values(y, x));  // bit-exact forward

  // upstream of ones, lambda 1 -> gradient of -1s.
  Tape t2;
  const Tensor l2 = t2.leaf(Tensor::vector({4, 5}));
  const Gradients g2 = t2.backward(sum(t2, grl(t2, l2, 1.0)));
  CHECK(g2.at(l2)[0] == -1.0);
  CHECK(g2.at(l2)[1] == -1.0);

  // lambda 0 detaches.
  Tape t3;
  const Tensor l3 = t3.leaf(Tensor::vector({4, 5}));
  const Gradients g3 = t3.backward(sum(t3, grl(t3, l3, 0.0)));
  CHECK(g3.at(l3)[0] == 0.0);

  // Double reversal multiplies the factors (positive sign).
  Tape t4;
  const Tensor l4 = t4.leaf(Tensor::vector({1, 1, 1}));
  const Gradients g4 = t4.backward(sum(t4, grl(t4, grl(t4, l4, 0.5), 3.0)));
  for (std::size_t i = 0; i < 3; ++i) CHECK(g4.at(l4)[i] == doctest::Approx(1.5).epsilon(1e-15));

  CHECK_THROWS_AS(grl(tape, x, -0.5), ConfigError);
}

TEST_CASE("double consumption accumulates like the single-path form") {
  CounterRng rng(23);
  const Tensor x = test::random_matrix(rng, 3, 3);
  const Tensor a = test::random_matrix(rng, 3, 3);
  const Tensor b = test::random_matrix(rng, 3, 3);

  Tape t1;
  const Tensor l1 = t1.leaf(x);
  const Tensor two_paths = sum(t1, add(t1, mul(t1, l1, a), mul(t1, l1, b)));
  const Gradients g1 = t1.backward(two_paths);

  Tape t2;
  const Tensor l2 = t2.leaf(x);
  const Tensor one_path = sum(t2, mul(t2, l2, add(t2, a, b)));
  const Gradients g2 = t2.backward(one_path);

  for (std::size_t i = 0; i < x.numel(); ++i) {
    CHECK(g1.at(l1)[i] == doctest::Approx(g2.at(l2)[i]).epsilon(1e-12));
  }
}

TEST_CASE("grad_check on a quadratic") {
  const Tensor x = Tensor::vector({1, 2});
  Tape tape;
  const Tensor leaf = tape.leaf(x);
  const Gradients grads = tape.backward(sum(tape, mul(tape, leaf, leaf)));
  CHECK(grads.at(leaf)[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(grads.at(leaf)[1] == doctest::Approx(4.0).epsilon(1e-12));

  const double err = grad_check(
      [](Tape& t, const Tensor& v) { return sum(t, mul(t, v, v)); }, x, 1e-5);
  CHECK(err < 1e-8);
}

TEST_CASE("grad_check contract errors") {
  const Tensor x = Tensor::vector({1, 2});
  CHECK_THROWS_AS(grad_check([](Tape& t, const Tensor& v) { return mul(t, v, v); }, x, 1e-5),
                  ContractError);
  CHECK_THROWS_AS(grad_check([](Tape& t, const Tensor& v) { return sum(t, v); }, x, 1e-2),
                  ContractError);
}

TEST_CASE("every primitive passes the finite-difference suite") {
  const auto reports = run_gradient_suite(0);
  for (const auto& r : reports) {
    INFO(r.op, " max_rel_error=", r.max_rel_error);
    CHECK(r.pass);
  }
}

TEST_CASE("tape misuse is caught") {
  Tape a, b;
  const Tensor la = a.leaf(Tensor::vector({1}));
  CHECK_THROWS_AS(sum(b, la), ContractError);

  Tape t;
  const Tensor leaf = t.leaf(Tensor::vector({1, 2}));
  CHECK_THROWS_AS(t.backward(leaf), ContractError);  // non-scalar root

  const Tensor constant = Tensor::vector({1});
  CHECK_THROWS_AS(t.backward(constant), ContractError);
}

TEST_CASE("primitive shape errors name both shapes") {
  Tape tape;
  const Tensor a = Tensor::zeros(2, 3);
  const Tensor b = Tensor::zeros(2, 2);
  CHECK_THROWS_WITH_AS(matmul(tape, a, b), doctest::Contains("[2x3]"), ContractError);
  CHECK_THROWS_WITH_AS(add(tape, a, b), doctest::Contains("[2x2]"), ContractError);
  CHECK_THROWS_AS(gather_rows(tape, a, std::vector<std::size_t>{5}), ContractError);
}

TEST_CASE("constants fold without recording") {
  Tape tape;
  const Tensor a = Tensor::from_rows({{1, 2}, {3, 4}});
  const Tensor out = matmul(tape, a, a);
  CHECK(!out.node.has_value());
  CHECK(tape.size() == 0);
}
