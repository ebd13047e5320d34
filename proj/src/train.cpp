// SPDX-License-Identifier: Apache-2.0
#include "cscal/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cscal/errors.hpp"
#include "cscal/rng.hpp"

namespace cscal {

double omega(std::size_t step, std::size_t total_steps, RampKind ramp) {
  if (total_steps < 1) throw ContractError("omega requires total_steps >= 1");
  if (step > total_steps) throw ContractError("omega step out of range");
  const double p = static_cast<double>(step) / static_cast<double>(total_steps);
  if (ramp == RampKind::linear) return p;
  return 2.0 / (1.0 + std::exp(-10.0 * p)) - 1.0;
}

void sgd_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
              OptimizerState& state, double lr, double momentum, double weight_decay) {
  if (params.size() != grads.size()) {
    throw ContractError("sgd_step: parameter/gradient count mismatch");
  }
  if (state.velocity.empty()) {
    state.velocity.reserve(params.size());
    for (const Tensor* p : params) state.velocity.emplace_back(Tensor(p->shape()));
  }
  if (state.velocity.size() != params.size()) {
    throw ContractError("sgd_step: optimizer state does not match parameter count");
  }
  for (std::size_t t = 0; t < params.size(); ++t) {
    Tensor& w = *params[t];
    const Tensor& g = grads[t];
    Tensor& v = state.velocity[t];
    if (!same_shape(w, g) || !same_shape(w, v)) {
      throw ContractError("sgd_step: shape mismatch at parameter " + std::to_string(t));
    }
    for (std::size_t i = 0; i < w.numel(); ++i) {
      const double decayed = g[i] + weight_decay * w[i];
      v[i] = momentum * v[i] + decayed;
      w[i] -= lr * v[i];
    }
  }
  ++state.step;
}

std::pair<DomainDataset, DomainDataset> make_datasets(const DataConfig& config) {
  switch (config.kind) {
    case DataConfig::Kind::two_moons:
    case DataConfig::Kind::gaussian_mixture:
      return generate(config.shift);
    case DataConfig::Kind::csv:
      return load_csv(config.csv_path, config.csv_schema);
  }
  throw ConfigError("unknown data kind");
}

void validate(const TrainConfig& config) {
  if (config.lr <= 0.0) throw ConfigError("optimizer.lr must be positive");
  if (config.epochs < 1) throw ConfigError("schedule.epochs must be >= 1");
  if (config.batch_size < 1) throw ConfigError("schedule.batch_size must be >= 1");
  if (config.momentum < 0.0 || config.momentum >= 1.0) {
    throw ConfigError("optimizer.momentum must lie in [0, 1)");
  }
  if (config.weight_decay < 0.0) throw ConfigError("optimizer.weight_decay must be >= 0");
  if (config.alpha0 < 0.0 || config.beta < 0.0 || config.gamma < 0.0) {
    throw ConfigError("loss weights must be non-negative");
  }
  if (config.pseudo_label_threshold < 0.0 || config.pseudo_label_threshold > 1.0) {
    throw ConfigError("losses.pseudo_label_threshold must lie in [0, 1]");
  }
  if (config.g_hidden.empty()) throw ConfigError("model.g_hidden must not be empty");
  for (std::size_t w : config.g_hidden) {
    if (w < 1) throw ConfigError("model.g_hidden widths must be >= 1");
  }
}

namespace {

constexpr std::size_t kEvalBatch = 256;

Tensor predict_rows(const ModelParams& g, const ModelParams& c, const Tensor& features,
                    std::size_t row_begin, std::size_t row_end) {
  Tensor x = Tensor::zeros(row_end - row_begin, features.cols());
  for (std::size_t i = row_begin; i < row_end; ++i) {
    for (std::size_t j = 0; j < features.cols(); ++j) x.at(i - row_begin, j) = features.at(i, j);
  }
  Tape tape;  // parameters stay constants: pure forward, nothing recorded
  return classify(tape, c, extract(tape, g, x));
}

Tensor full_predictions(const ModelParams& g, const ModelParams& c, const DomainDataset& dataset) {
  const std::size_t n = dataset.size();
  Tensor preds;
  bool first = true;
  for (std::size_t begin = 0; begin < n; begin += kEvalBatch) {
    const std::size_t end = std::min(begin + kEvalBatch, n);
    Tensor block = predict_rows(g, c, dataset.features, begin, end);
    if (first) {
      preds = Tensor::zeros(n, block.cols());
      first = false;
    }
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t j = 0; j < block.cols(); ++j) preds.at(i, j) = block.at(i - begin, j);
    }
  }
  return preds;
}

}  // namespace

EvalResult evaluate(const ModelParams& params_g, const ModelParams& params_c,
                    const DomainDataset& dataset) {
  if (dataset.size() == 0) throw ContractError("evaluate requires a non-empty dataset");
  const Tensor preds = full_predictions(params_g, params_c, dataset);
  const std::size_t k = preds.cols();

  EvalResult out;
  out.confusion.assign(k, std::vector<int>(k, 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const int truth = dataset.labels[i];
    if (truth < 0 || static_cast<std::size_t>(truth) >= k) {
      throw ContractError("evaluate: label " + std::to_string(truth) + " outside classifier range");
    }
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j) {
      if (preds.at(i, j) > preds.at(i, best)) best = j;
    }
    out.confusion[static_cast<std::size_t>(truth)][best] += 1;
    if (static_cast<std::size_t>(truth) == best) ++correct;
  }
  out.accuracy = static_cast<double>(correct) / static_cast<double>(dataset.size());

  const ClassCorrelation corr = class_correlation(preds);
  out.diag_stat = corr.diag_stat;
  out.trace_s = corr.trace_s;
  out.frobenius = corr.frobenius;
  return out;
}

namespace {

nlohmann::json breakdown_to_json(const LossBreakdown& b) {
  return nlohmann::json{{"ce", b.ce},
                        {"pld_intra", b.pld_intra},
                        {"pld_inter", b.pld_inter},
                        {"nnd", b.nnd},
                        {"mi", b.mi},
                        {"total", b.total},
                        {"intra_pairs", b.intra_pairs},
                        {"inter_pairs", b.inter_pairs}};
}

}  // namespace

TrainResult train_run(const TrainConfig& config) {
  validate(config);
  auto [source, target] = make_datasets(config.data);
  if (source.size() == 0 || target.size() == 0) {
    throw DataError("training requires non-empty source and target datasets");
  }
  const std::size_t d = source.dim();
  const std::size_t k = num_classes(source);
  if (k < 2) throw DataError("training requires at least two source classes");
  if (config.batch_size > source.size() || config.batch_size > target.size()) {
    throw ConfigError("schedule.batch_size exceeds a dataset size");
  }

  MlpSpec g_spec;
  g_spec.widths.push_back(d);
  for (std::size_t w : config.g_hidden) g_spec.widths.push_back(w);
  MlpSpec c_spec{{config.g_hidden.back(), k}};

  TrainResult result;
  result.g = init_params(g_spec, derive_seed(config.seed, 1));
  result.c = init_params(c_spec, derive_seed(config.seed, 2));

  CounterRng batch_rng(config.seed, 3);
  const std::size_t steps_per_epoch =
      config.steps_per_epoch > 0 ? config.steps_per_epoch
                                 : std::max<std::size_t>(1, source.size() / config.batch_size);
  const std::size_t total_steps = config.epochs * steps_per_epoch;

  ObjectiveOptions options;
  options.enable_pld = !config.disable_pld;
  options.enable_nnd = !config.disable_nnd;
  options.enable_mi = !config.disable_mi;
  options.nnd_normalize = config.nnd_normalize;
  options.pseudo_label_threshold = config.pseudo_label_threshold;

  OptimizerState opt_state;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    MetricsRecord rec;
    rec.epoch = epoch;
    std::size_t steps_with_inter = 0;

    for (std::size_t s = 0; s < steps_per_epoch; ++s) {
      const std::size_t global_step = epoch * steps_per_epoch + s;
      const double w = omega(global_step, total_steps, config.ramp);
      const LossWeights weights{w * config.alpha0, config.beta, config.gamma};

      auto [sb, tb] = next_batch(source, target, config.batch_size, batch_rng);

      Tape tape;
      const ModelParams bound_g = bind(tape, result.g);
      const ModelParams bound_c = bind(tape, result.c);
      Objective obj;
      try {
        obj = cscal_objective(tape, bound_g, bound_c, sb.x, sb.labels, tb.x, weights, w, options);
      } catch (const NumericError& e) {
        throw NumericError("numeric failure at step " + std::to_string(global_step) + ": " +
                           e.what());
      }
      if (!std::isfinite(obj.breakdown.total)) {
        throw NumericError("non-finite loss at step " + std::to_string(global_step) + ": " +
                           breakdown_to_json(obj.breakdown).dump());
      }

      const Gradients grads = tape.backward(obj.total);
      std::vector<Tensor*> params = param_tensors(result.g);
      for (Tensor* p : param_tensors(result.c)) params.push_back(p);
      std::vector<const Tensor*> bound = param_tensors(bound_g);
      for (const Tensor* p : param_tensors(bound_c)) bound.push_back(p);
      std::vector<Tensor> grad_list;
      grad_list.reserve(bound.size());
      for (const Tensor* p : bound) grad_list.push_back(grads.at(*p));
      sgd_step(params, grad_list, opt_state, config.lr, config.momentum, config.weight_decay);
      for (const Tensor* p : params) {
        if (!p->all_finite()) {
          throw NumericError("non-finite parameters after step " + std::to_string(global_step) +
                             ": " + breakdown_to_json(obj.breakdown).dump());
        }
      }

      rec.ce += obj.breakdown.ce;
      rec.pld_intra += obj.breakdown.pld_intra;
      rec.pld_inter += obj.breakdown.pld_inter;
      rec.nnd += obj.breakdown.nnd;
      rec.mi += obj.breakdown.mi;
      rec.total += obj.breakdown.total;
      rec.mean_intra_pairs += static_cast<double>(obj.breakdown.intra_pairs);
      rec.mean_inter_pairs += static_cast<double>(obj.breakdown.inter_pairs);
      if (obj.breakdown.inter_pairs > 0) ++steps_with_inter;
    }

    const double inv = 1.0 / static_cast<double>(steps_per_epoch);
    rec.ce *= inv;
    rec.pld_intra *= inv;
    rec.pld_inter *= inv;
    rec.nnd *= inv;
    rec.mi *= inv;
    rec.total *= inv;
    rec.mean_intra_pairs *= inv;
    rec.mean_inter_pairs *= inv;
    rec.pair_coverage = static_cast<double>(steps_with_inter) * inv;

    EvalResult src_eval, tgt_eval;
    try {
      src_eval = evaluate(result.g, result.c, source);
      tgt_eval = evaluate(result.g, result.c, target);
    } catch (const NumericError& e) {
      throw NumericError("numeric failure in evaluation after step " +
                         std::to_string((epoch + 1) * steps_per_epoch - 1) + ": " + e.what());
    }
    rec.source_acc = src_eval.accuracy;
    rec.target_acc = tgt_eval.accuracy;
    rec.confusion = tgt_eval.confusion;
    rec.diag_stat_source = src_eval.diag_stat;
    rec.diag_stat_target = tgt_eval.diag_stat;
    rec.trace_s_source = src_eval.trace_s;
    rec.trace_s_target = tgt_eval.trace_s;
    result.metrics.push_back(std::move(rec));
  }
  return result;
}

std::vector<AblationRow> ablate(const TrainConfig& config) {
  struct Variant {
    const char* name;
    bool no_pld, no_nnd, no_mi;
  };
  const Variant variants[] = {
      {"full", false, false, false},
      {"wo_pld", true, false, false},
      {"wo_nnd", false, true, false},
      {"wo_mi", false, false, true},
      {"source_only", true, true, true},
  };
  std::vector<AblationRow> rows;
  for (const Variant& v : variants) {
    TrainConfig c = config;
    c.disable_pld = c.disable_pld || v.no_pld;
    c.disable_nnd = c.disable_nnd || v.no_nnd;
    c.disable_mi = c.disable_mi || v.no_mi;
    TrainResult r = train_run(c);
    rows.push_back(AblationRow{v.name, r.metrics.back()});
  }
  return rows;
}

namespace {

nlohmann::json record_to_json(const MetricsRecord& r) {
  return nlohmann::json{{"type", "epoch"},
                        {"epoch", r.epoch},
                        {"loss",
                         {{"ce", r.ce},
                          {"pld_intra", r.pld_intra},
                          {"pld_inter", r.pld_inter},
                          {"nnd", r.nnd},
                          {"mi", r.mi},
                          {"total", r.total}}},
                        {"mean_intra_pairs", r.mean_intra_pairs},
                        {"mean_inter_pairs", r.mean_inter_pairs},
                        {"pair_coverage", r.pair_coverage},
                        {"source_acc", r.source_acc},
                        {"target_acc", r.target_acc},
                        {"confusion", r.confusion},
                        {"diag_stat_source", r.diag_stat_source},
                        {"diag_stat_target", r.diag_stat_target},
                        {"trace_s_source", r.trace_s_source},
                        {"trace_s_target", r.trace_s_target}};
}

}  // namespace

std::string metrics_to_jsonl(std::span<const MetricsRecord> records, std::uint64_t seed,
                             const std::string& config_hash) {
  std::ostringstream out;
  out << nlohmann::json{{"type", "header"}, {"seed", seed}, {"config_hash", config_hash}}.dump()
      << '\n';
  for (const MetricsRecord& r : records) out << record_to_json(r).dump() << '\n';
  return out.str();
}

std::string ablation_to_csv(std::span<const AblationRow> rows, std::uint64_t seed,
                            const std::string& config_hash) {
  std::ostringstream out;
  out << "# seed=" << seed << " config_hash=" << config_hash << '\n';
  out << "variant,source_acc,target_acc,ce,pld_intra,pld_inter,nnd,mi,total\n";
  out.precision(17);
  for (const AblationRow& r : rows) {
    const MetricsRecord& m = r.final_metrics;
    out << r.variant << ',' << m.source_acc << ',' << m.target_acc << ',' << m.ce << ','
        << m.pld_intra << ',' << m.pld_inter << ',' << m.nnd << ',' << m.mi << ',' << m.total
        << '\n';
  }
  return out.str();
}

void export_embeddings(const ModelParams& params_g, const ModelParams& params_c,
                       const DomainDataset& source, const DomainDataset& target,
                       const std::filesystem::path& path, std::uint64_t seed,
                       const std::string& config_hash) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open embeddings file for writing: " + path.string());
  const std::size_t h = params_g.spec.widths.back();
  out << "# seed=" << seed << " config_hash=" << config_hash << '\n';
  for (std::size_t j = 0; j < h; ++j) out << "feature_" << j << ',';
  out << "domain,label,prediction\n";
  out.precision(17);

  auto dump = [&](const DomainDataset& ds, const char* tag) {
    for (std::size_t begin = 0; begin < ds.size(); begin += kEvalBatch) {
      const std::size_t end = std::min(begin + kEvalBatch, ds.size());
      Tensor x = Tensor::zeros(end - begin, ds.dim());
      for (std::size_t i = begin; i < end; ++i) {
        for (std::size_t j = 0; j < ds.dim(); ++j) x.at(i - begin, j) = ds.features.at(i, j);
      }
      Tape tape;
      const Tensor feats = extract(tape, params_g, x);
      const Tensor preds = classify(tape, params_c, feats);
      for (std::size_t i = 0; i < feats.rows(); ++i) {
        for (std::size_t j = 0; j < h; ++j) out << feats.at(i, j) << ',';
        std::size_t best = 0;
        for (std::size_t j = 1; j < preds.cols(); ++j) {
          if (preds.at(i, j) > preds.at(i, best)) best = j;
        }
        out << tag << ',' << ds.labels[begin + i] << ',' << best << '\n';
      }
    }
  };
  dump(source, "source");
  dump(target, "target");
}

}  // namespace cscal
