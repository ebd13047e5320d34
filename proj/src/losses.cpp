// SPDX-License-Identifier: Apache-2.0
#include "cscal/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cscal/errors.hpp"
#include "cscal/ops.hpp"

namespace cscal {

void require_row_stochastic(const char* who, const Tensor& m, double tol) {
  const std::size_t r = m.rows(), c = m.cols();
  for (std::size_t i = 0; i < r; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      const double v = m.at(i, j);
      if (!std::isfinite(v)) {
        throw NumericError(std::string(who) + ": non-finite probability at row " + std::to_string(i));
      }
      if (v < 0.0) {
        throw ContractError(std::string(who) + ": negative probability at row " + std::to_string(i));
      }
      s += v;
    }
    if (std::abs(s - 1.0) > tol) {
      throw ContractError(std::string(who) + ": row " + std::to_string(i) +
                          " sums to " + std::to_string(s) + ", expected 1");
    }
  }
}

namespace {

void require_probability_vector(const char* who, const Tensor& p, double tol = 1e-9) {
  if (p.rank() != 1) {
    throw ContractError(std::string(who) + " expects rank-1 probability vectors, got " +
                        shape_to_string(p.shape()));
  }
  double s = 0.0;
  for (double v : p.data()) {
    if (v < 0.0) throw ContractError(std::string(who) + ": negative probability entry");
    s += v;
  }
  if (std::abs(s - 1.0) > tol) {
    throw ContractError(std::string(who) + ": vector sums to " + std::to_string(s) + ", expected 1");
  }
}

// Mean JS divergence between matching rows of a and b (n x k each).
// 0.5/n * sum[ a (ln a - ln m) + b (ln b - ln m) ], m = (a+b)/2.
Tensor mean_js_rows(Tape& tape, const Tensor& a, const Tensor& b, std::size_t n) {
  Tensor log_m = log_guarded(tape, scale(tape, add(tape, a, b), 0.5));
  Tensor part_a = sum(tape, mul(tape, a, sub(tape, log_guarded(tape, a), log_m)));
  Tensor part_b = sum(tape, mul(tape, b, sub(tape, log_guarded(tape, b), log_m)));
  return scale(tape, add(tape, part_a, part_b), 0.5 / static_cast<double>(n));
}

}  // namespace

Tensor js_divergence(Tape& tape, const Tensor& p, const Tensor& q) {
  require_probability_vector("js_divergence", p);
  require_probability_vector("js_divergence", q);
  if (p.shape() != q.shape()) {
    throw ContractError("js_divergence length mismatch: " + shape_to_string(p.shape()) + " vs " +
                        shape_to_string(q.shape()));
  }
  return mean_js_rows(tape, p, q, 1);
}

PairSet build_pairs(std::span<const int> source_labels, std::span<const int> target_pseudo) {
  for (int y : source_labels) {
    if (y < 0) throw ContractError("build_pairs: negative source label");
  }
  for (int y : target_pseudo) {
    if (y < 0) throw ContractError("build_pairs: negative target pseudo label");
  }
  PairSet pairs;
  for (std::size_t i = 0; i < source_labels.size(); ++i) {
    for (std::size_t j = i + 1; j < source_labels.size(); ++j) {
      if (source_labels[i] == source_labels[j]) pairs.intra.emplace_back(i, j);
    }
  }
  for (std::size_t i = 0; i < source_labels.size(); ++i) {
    for (std::size_t j = 0; j < target_pseudo.size(); ++j) {
      if (source_labels[i] == target_pseudo[j]) pairs.inter.emplace_back(i, j);
    }
  }
  return pairs;
}

std::pair<Tensor, Tensor> pld_loss(Tape& tape, const Tensor& preds_s, const Tensor& preds_t,
                                   const PairSet& pairs) {
  require_row_stochastic("pld_loss source", preds_s);
  require_row_stochastic("pld_loss target", preds_t);
  for (const auto& [i, j] : pairs.intra) {
    if (i >= preds_s.rows() || j >= preds_s.rows()) {
      throw ContractError("pld_loss: intra pair index out of range");
    }
  }
  for (const auto& [i, j] : pairs.inter) {
    if (i >= preds_s.rows() || j >= preds_t.rows()) {
      throw ContractError("pld_loss: inter pair index out of range");
    }
  }

  Tensor intra = Tensor::scalar(0.0);
  if (!pairs.intra.empty()) {
    std::vector<std::size_t> first, second;
    first.reserve(pairs.intra.size());
    second.reserve(pairs.intra.size());
    for (const auto& [i, j] : pairs.intra) {
      first.push_back(i);
      second.push_back(j);
    }
    intra = mean_js_rows(tape, gather_rows(tape, preds_s, first),
                         gather_rows(tape, preds_s, second), pairs.intra.size());
  }

  Tensor inter = Tensor::scalar(0.0);
  if (!pairs.inter.empty()) {
    std::vector<std::size_t> src, tgt;
    src.reserve(pairs.inter.size());
    tgt.reserve(pairs.inter.size());
    for (const auto& [i, j] : pairs.inter) {
      src.push_back(i);
      tgt.push_back(j);
    }
    inter = mean_js_rows(tape, gather_rows(tape, preds_s, src),
                         gather_rows(tape, preds_t, tgt), pairs.inter.size());
  }
  return {intra, inter};
}

Tensor nnd_loss(Tape& tape, const Tensor& preds_s, const Tensor& preds_t, bool normalize) {
  if (preds_s.rows() == 0 || preds_t.rows() == 0) {
    throw ContractError("nnd_loss requires non-empty prediction batches");
  }
  require_row_stochastic("nnd_loss source", preds_s);
  require_row_stochastic("nnd_loss target", preds_t);
  Tensor n_s = nuclear_norm(tape, preds_s);
  Tensor n_t = nuclear_norm(tape, preds_t);
  if (normalize) {
    n_s = scale(tape, n_s, 1.0 / static_cast<double>(preds_s.rows()));
    n_t = scale(tape, n_t, 1.0 / static_cast<double>(preds_t.rows()));
  }
  return sub(tape, n_s, n_t);
}

Tensor mi_loss(Tape& tape, const Tensor& preds_t) {
  if (preds_t.rows() == 0) throw ContractError("mi_loss requires a non-empty batch");
  require_row_stochastic("mi_loss", preds_t);
  Tensor pbar = mean_rows(tape, preds_t);
  Tensor marginal_entropy =
      scale(tape, sum(tape, mul(tape, pbar, log_guarded(tape, pbar))), -1.0);
  Tensor mean_neg_cond_entropy =
      scale(tape, sum(tape, mul(tape, preds_t, log_guarded(tape, preds_t))),
            1.0 / static_cast<double>(preds_t.rows()));
  return add(tape, marginal_entropy, mean_neg_cond_entropy);
}

Tensor ce_loss(Tape& tape, const Tensor& preds_s, std::span<const int> labels) {
  const std::size_t b = preds_s.rows(), k = preds_s.cols();
  if (labels.size() != b) {
    throw ContractError("ce_loss: " + std::to_string(labels.size()) + " labels for " +
                        std::to_string(b) + " rows");
  }
  if (b == 0) throw ContractError("ce_loss requires a non-empty batch");
  require_row_stochastic("ce_loss", preds_s);
  Tensor mask = Tensor::zeros(b, k);
  for (std::size_t i = 0; i < b; ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= k) {
      throw ContractError("ce_loss: label " + std::to_string(y) + " out of range [0, " +
                          std::to_string(k) + ")");
    }
    mask.at(i, static_cast<std::size_t>(y)) = 1.0;
  }
  Tensor picked = mul(tape, log_guarded(tape, preds_s), mask);
  return scale(tape, sum(tape, picked), -1.0 / static_cast<double>(b));
}

ClassCorrelation class_correlation(const Tensor& preds) {
  require_row_stochastic("class_correlation", preds);
  ClassCorrelation out;
  out.s = matmul_value(transpose_value(preds), preds);
  for (std::size_t j = 0; j < out.s.rows(); ++j) out.trace_s += out.s.at(j, j);
  out.diag_stat = 2.0 * out.trace_s - static_cast<double>(preds.rows());
  out.frobenius = frobenius_norm(preds);
  return out;
}

Objective cscal_objective(Tape& tape, const ModelParams& params_g, const ModelParams& params_c,
                          const Tensor& source_x, std::span<const int> source_labels,
                          const Tensor& target_x, const LossWeights& weights, double lambda_grl,
                          const ObjectiveOptions& options) {
  if (weights.alpha < 0.0 || weights.beta < 0.0 || weights.gamma < 0.0) {
    throw ContractError("loss weights must be non-negative");
  }

  const Tensor features_s = extract(tape, params_g, source_x);
  const Tensor features_t = extract(tape, params_g, target_x);

  // Direct path: cross-entropy and mutual information, minimized by both
  // networks.
  const Tensor preds_s = classify(tape, params_c, features_s);
  const Tensor preds_t = classify(tape, params_c, features_t);
  const std::size_t k = preds_t.cols();

  Objective obj;
  Tensor ce = ce_loss(tape, preds_s, source_labels);
  obj.breakdown.ce = ce.value();
  Tensor total = ce;

  // Pseudo labels: argmax of the direct target predictions, as values only.
  obj.pseudo_labels.resize(preds_t.rows());
  for (std::size_t i = 0; i < preds_t.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j) {
      if (preds_t.at(i, j) > preds_t.at(i, best)) best = j;
    }
    const bool confident = preds_t.at(i, best) >= options.pseudo_label_threshold;
    obj.pseudo_labels[i] = confident ? static_cast<int>(best) : -1;
  }

  if (options.fixed_pairs) {
    obj.pairs = *options.fixed_pairs;
  } else {
    std::vector<std::size_t> kept;
    std::vector<int> kept_pseudo;
    for (std::size_t i = 0; i < obj.pseudo_labels.size(); ++i) {
      if (obj.pseudo_labels[i] >= 0) {
        kept.push_back(i);
        kept_pseudo.push_back(obj.pseudo_labels[i]);
      }
    }
    obj.pairs = build_pairs(source_labels, kept_pseudo);
    for (auto& [s, t] : obj.pairs.inter) t = kept[t];
  }
  obj.breakdown.intra_pairs = obj.pairs.intra.size();
  obj.breakdown.inter_pairs = obj.pairs.inter.size();

  if (options.enable_mi) {
    Tensor mi = mi_loss(tape, preds_t);
    obj.breakdown.mi = mi.value();
    total = sub(tape, total, scale(tape, mi, weights.gamma));
  }

  // Adversarial path: gradient reversal between the features and the
  // classifier flips what the extractor sees, so the classifier climbs these
  // discrepancies while the extractor descends them.
  if (options.enable_pld || options.enable_nnd) {
    const Tensor preds_s_adv = classify(tape, params_c, features_s, lambda_grl);
    const Tensor preds_t_adv = classify(tape, params_c, features_t, lambda_grl);
    if (options.enable_pld) {
      auto [intra, inter] = pld_loss(tape, preds_s_adv, preds_t_adv, obj.pairs);
      obj.breakdown.pld_intra = intra.value();
      obj.breakdown.pld_inter = inter.value();
      total = sub(tape, total, scale(tape, add(tape, intra, inter), weights.alpha));
    }
    if (options.enable_nnd) {
      Tensor nnd = nnd_loss(tape, preds_s_adv, preds_t_adv, options.nnd_normalize);
      obj.breakdown.nnd = nnd.value();
      total = sub(tape, total, scale(tape, nnd, weights.beta));
    }
  }

  obj.breakdown.total = total.value();
  obj.total = std::move(total);
  return obj;
}

}  // namespace cscal
