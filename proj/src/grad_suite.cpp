// SPDX-License-Identifier: Apache-2.0
#include "cscal/grad_suite.hpp"

#include <algorithm>
#include <cmath>

#include "cscal/losses.hpp"
#include "cscal/model.hpp"
#include "cscal/ops.hpp"
#include "cscal/rng.hpp"
#include "cscal/svd.hpp"

namespace cscal {

namespace {

constexpr double kEps = 1e-5;
constexpr double kPrimitiveThreshold = 1e-5;
constexpr double kObjectiveThreshold = 1e-4;

Tensor random_matrix(CounterRng& rng, std::size_t r, std::size_t c, double margin = 0.0) {
  Tensor t = Tensor::zeros(r, c);
  for (std::size_t i = 0; i < t.numel(); ++i) {
    double v = rng.next_normal();
    // Keep entries away from kink points (relu at 0) when asked.
    while (margin > 0.0 && std::abs(v) < margin) v = rng.next_normal();
    t[i] = v;
  }
  return t;
}

Tensor random_vector(CounterRng& rng, std::size_t n) {
  Tensor t(Shape{n});
  for (std::size_t i = 0; i < n; ++i) t[i] = rng.next_normal();
  return t;
}

// Row-stochastic matrix with a safe gap between neighboring singular values
// so the nuclear-norm derivative is smooth at the probe scale.
Tensor random_predictions(CounterRng& rng, std::size_t r, std::size_t c) {
  for (;;) {
    Tensor preds = softmax_rows_value(random_matrix(rng, r, c));
    const ThinSvd svd = thin_svd(preds);
    bool ok = true;
    for (std::size_t i = 0; i + 1 < svd.sigma.size(); ++i) {
      if (svd.sigma[i] - svd.sigma[i + 1] < 1e-3) ok = false;
    }
    if (ok) return preds;
  }
}

void report(std::vector<OpGradReport>& out, const std::string& op, double err, double threshold) {
  out.push_back(OpGradReport{op, err, threshold, err < threshold});
}

// Objective gradients versus per-path finite differences. Classifier
// parameters see the objective as written; extractor parameters see the
// reversed terms with sign +lambda, which is what the reversal layer routes.
double objective_grad_error(std::uint64_t seed) {
  CounterRng rng(seed, 77);
  const std::size_t b = 8, d = 2, k = 3;
  const MlpSpec g_spec{{d, 8, 4}};
  const MlpSpec c_spec{{4, k}};
  ModelParams g = init_params(g_spec, derive_seed(seed, 101));
  ModelParams c = init_params(c_spec, derive_seed(seed, 102));

  const Tensor xs = random_matrix(rng, b, d);
  const Tensor xt = random_matrix(rng, b, d);
  std::vector<int> ys(b);
  for (std::size_t i = 0; i < b; ++i) ys[i] = static_cast<int>(rng.next_below(k));

  const LossWeights weights{1.0, 0.1, 0.1};
  const double lambda = 0.7;

  Tape tape;
  const ModelParams bound_g = bind(tape, g);
  const ModelParams bound_c = bind(tape, c);
  ObjectiveOptions options;
  const Objective base = cscal_objective(tape, bound_g, bound_c, xs, ys, xt, weights, lambda, options);
  const Gradients grads = tape.backward(base.total);

  ObjectiveOptions frozen = options;
  frozen.fixed_pairs = base.pairs;

  const auto forward_breakdown = [&](const ModelParams& gp, const ModelParams& cp) {
    Tape probe;
    return cscal_objective(probe, gp, cp, xs, ys, xt, weights, lambda, frozen).breakdown;
  };
  const auto scalar_for_c = [&](const LossBreakdown& bd) { return bd.total; };
  const auto scalar_for_g = [&](const LossBreakdown& bd) {
    return bd.ce + lambda * weights.alpha * (bd.pld_intra + bd.pld_inter) +
           lambda * weights.beta * bd.nnd - weights.gamma * bd.mi;
  };

  double worst = 0.0;
  const auto check_params = [&](ModelParams& live, const ModelParams& bound, bool is_extractor) {
    const auto bound_list = param_tensors(bound);
    auto live_list = param_tensors(live);
    for (std::size_t t = 0; t < live_list.size(); ++t) {
      const Tensor& analytic = grads.at(*bound_list[t]);
      Tensor& theta = *live_list[t];
      for (std::size_t i = 0; i < theta.numel(); ++i) {
        const double saved = theta[i];
        theta[i] = saved + kEps;
        const LossBreakdown plus = forward_breakdown(g, c);
        theta[i] = saved - kEps;
        const LossBreakdown minus = forward_breakdown(g, c);
        theta[i] = saved;
        const double fp = is_extractor ? scalar_for_g(plus) : scalar_for_c(plus);
        const double fm = is_extractor ? scalar_for_g(minus) : scalar_for_c(minus);
        const double numeric = (fp - fm) / (2.0 * kEps);
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
        worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
      }
    }
  };
  check_params(g, bound_g, true);
  check_params(c, bound_c, false);
  return worst;
}

}  // namespace

std::vector<OpGradReport> run_gradient_suite(std::uint64_t seed) {
  std::vector<OpGradReport> out;
  CounterRng rng(seed, 7);

  {
    const Tensor b = random_matrix(rng, 4, 2);
    const Tensor a = random_matrix(rng, 3, 4);
    report(out, "matmul",
           grad_check([&](Tape& t, const Tensor& x) { return sum(t, matmul(t, x, b)); }, a, kEps),
           kPrimitiveThreshold);
  }
  {
    const Tensor b = random_matrix(rng, 3, 4);
    report(out, "add",
           grad_check([&](Tape& t, const Tensor& x) { return sum(t, mul(t, add(t, x, b), add(t, x, b))); },
                      random_matrix(rng, 3, 4), kEps),
           kPrimitiveThreshold);
    report(out, "sub",
           grad_check([&](Tape& t, const Tensor& x) { return sum(t, mul(t, sub(t, x, b), sub(t, x, b))); },
                      random_matrix(rng, 3, 4), kEps),
           kPrimitiveThreshold);
    report(out, "mul",
           grad_check([&](Tape& t, const Tensor& x) { return sum(t, mul(t, x, mul(t, x, b))); },
                      random_matrix(rng, 3, 4), kEps),
           kPrimitiveThreshold);
  }
  report(out, "scale",
         grad_check([](Tape& t, const Tensor& x) { return sum(t, scale(t, mul(t, x, x), -1.7)); },
                    random_matrix(rng, 3, 4), kEps),
         kPrimitiveThreshold);
  {
    const Tensor row = random_vector(rng, 4);
    report(out, "add_rowwise(m)",
           grad_check([&](Tape& t, const Tensor& x) {
             Tensor y = add_rowwise(t, x, row);
             return sum(t, mul(t, y, y));
           }, random_matrix(rng, 3, 4), kEps),
           kPrimitiveThreshold);
    const Tensor m = random_matrix(rng, 3, 4);
    report(out, "add_rowwise(row)",
           grad_check([&](Tape& t, const Tensor& x) {
             Tensor y = add_rowwise(t, m, x);
             return sum(t, mul(t, y, y));
           }, random_vector(rng, 4), kEps),
           kPrimitiveThreshold);
  }
  report(out, "relu",
         grad_check([](Tape& t, const Tensor& x) { return sum(t, mul(t, relu(t, x), relu(t, x))); },
                    random_matrix(rng, 4, 3, /*margin=*/1e-3), kEps),
         kPrimitiveThreshold);
  {
    // Positive inputs away from the log floor.
    Tensor x = Tensor::zeros(3, 3);
    for (std::size_t i = 0; i < x.numel(); ++i) x[i] = 0.05 + rng.next_double();
    report(out, "log",
           grad_check([](Tape& t, const Tensor& v) { return sum(t, log_guarded(t, v)); }, x, kEps),
           kPrimitiveThreshold);
  }
  report(out, "sum",
         grad_check([](Tape& t, const Tensor& x) { return sum(t, mul(t, x, x)); },
                    random_matrix(rng, 2, 5), kEps),
         kPrimitiveThreshold);
  report(out, "mean",
         grad_check([](Tape& t, const Tensor& x) { return mean(t, mul(t, x, x)); },
                    random_matrix(rng, 2, 5), kEps),
         kPrimitiveThreshold);
  report(out, "mean_rows",
         grad_check([](Tape& t, const Tensor& x) {
           Tensor m = mean_rows(t, x);
           return sum(t, mul(t, m, m));
         }, random_matrix(rng, 4, 3), kEps),
         kPrimitiveThreshold);
  {
    const Tensor b = random_matrix(rng, 4, 3);
    report(out, "transpose",
           grad_check([&](Tape& t, const Tensor& x) { return sum(t, mul(t, transpose(t, x), b)); },
                      random_matrix(rng, 3, 4), kEps),
           kPrimitiveThreshold);
  }
  {
    const Tensor b = random_matrix(rng, 2, 4);
    report(out, "concat_rows",
           grad_check([&](Tape& t, const Tensor& x) {
             Tensor y = concat_rows(t, x, b);
             return sum(t, mul(t, y, y));
           }, random_matrix(rng, 3, 4), kEps),
           kPrimitiveThreshold);
  }
  {
    const std::vector<std::size_t> idx{0, 2, 2, 1};  // duplicate row on purpose
    report(out, "gather_rows",
           grad_check([&](Tape& t, const Tensor& x) {
             Tensor y = gather_rows(t, x, idx);
             return sum(t, mul(t, y, y));
           }, random_matrix(rng, 3, 4), kEps),
           kPrimitiveThreshold);
  }
  {
    const Tensor w = random_matrix(rng, 4, 5);
    report(out, "softmax_rows",
           grad_check([&](Tape& t, const Tensor& x) {
             return sum(t, mul(t, softmax_rows(t, x), w));
           }, random_matrix(rng, 4, 5), kEps),
           kPrimitiveThreshold);
  }
  {
    const Tensor m = random_predictions(rng, 5, 3);
    report(out, "nuclear_norm",
           grad_check([](Tape& t, const Tensor& x) { return nuclear_norm(t, x); }, m, kEps),
           kPrimitiveThreshold);
  }
  {
    // grl is identity forward: the tape gradient must be -lambda times the
    // finite-difference gradient of the unreversed forward map.
    const double lambda = 0.6;
    const Tensor x = random_matrix(rng, 3, 3);
    Tape tape;
    const Tensor leaf = tape.leaf(x);
    const Gradients grads = tape.backward(sum(tape, grl(tape, leaf, lambda)));
    const Tensor& analytic = grads.at(leaf);
    double worst = 0.0;
    Tensor probe = x;
    for (std::size_t i = 0; i < probe.numel(); ++i) {
      const auto forward_sum = [&]() {
        Tape p;
        return sum(p, grl(p, Tape::constant(probe), lambda)).value();
      };
      const double saved = probe[i];
      probe[i] = saved + kEps;
      const double plus = forward_sum();
      probe[i] = saved - kEps;
      const double minus = forward_sum();
      probe[i] = saved;
      const double numeric = -lambda * (plus - minus) / (2.0 * kEps);
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
      worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
    report(out, "grl", worst, kPrimitiveThreshold);
  }

  report(out, "cscal_objective", objective_grad_error(seed), kObjectiveThreshold);
  return out;
}

bool gradient_suite_passes(const std::vector<OpGradReport>& reports) {
  return std::all_of(reports.begin(), reports.end(),
                     [](const OpGradReport& r) { return r.pass; });
}

}  // namespace cscal
