// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cscal/errors.hpp"
#include "cscal/rng.hpp"
#include "cscal/tensor.hpp"

using namespace cscal;

TEST_CASE("shape bookkeeping") {
  Tensor t = Tensor::zeros(2, 3);
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  CHECK(t.numel() == 6);
  CHECK(shape_numel(t.shape()) == t.numel());

  Tensor s = Tensor::scalar(4.5);
  CHECK(s.rank() == 0);
  CHECK(s.numel() == 1);
  CHECK(s.value() == 4.5);
  CHECK_THROWS_AS(s.rows(), ContractError);
  CHECK_THROWS_AS(t.value(), ContractError);

  CHECK_THROWS_AS(Tensor(Shape{2, 2}, {1.0, 2.0, 3.0}), ContractError);
}

TEST_CASE("matmul_value basics") {
  const Tensor a = Tensor::from_rows({{1, 2}, {3, 4}});
  const Tensor i2 = Tensor::identity(2);
  CHECK(same_values(matmul_value(i2, a), a));

  const Tensor proj = Tensor::from_rows({{1, 0}, {0, 0}});
  const Tensor v = Tensor::from_rows({{5}, {7}});
  const Tensor got = matmul_value(proj, v);
  CHECK(got.at(0, 0) == 5.0);
  CHECK(got.at(1, 0) == 0.0);

  CHECK_THROWS_WITH_AS(matmul_value(v, a), doctest::Contains("[2x1]"), ContractError);
}

TEST_CASE("transpose and frobenius") {
  const Tensor a = Tensor::from_rows({{1, 2, 3}, {4, 5, 6}});
  const Tensor t = transpose_value(a);
  CHECK(t.rows() == 3);
  CHECK(t.at(2, 1) == 6.0);
  CHECK(frobenius_norm(a) == doctest::Approx(std::sqrt(91.0)).epsilon(1e-12));
}

TEST_CASE("softmax_rows_value is stable and normalized") {
  const Tensor logits = Tensor::from_rows({{0, 0, 0}, {1000, 0, 0}});
  const Tensor p = softmax_rows_value(logits);
  CHECK(p.at(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(p.at(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.all_finite());
  for (std::size_t i = 0; i < 2; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 3; ++j) s += p.at(i, j);
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }
}

TEST_CASE("counter rng is replayable and fair") {
  CounterRng a(7), b(7);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  // Replay from a saved state.
  CounterRng c(7);
  for (int i = 0; i < 50; ++i) c.next_double();
  CounterRng resumed = c;
  const double x = c.next_double();
  CHECK(resumed.next_double() == x);

  // Streams with different salts diverge.
  CounterRng s0(7, 0), s1(7, 1);
  CHECK(s0.next_u64() != s1.next_u64());

  // next_below stays in range and covers all buckets.
  CounterRng d(3);
  std::vector<int> counts(10, 0);
  for (int i = 0; i < 10000; ++i) counts[d.next_below(10)] += 1;
  for (int v : counts) CHECK(v > 800);
}
