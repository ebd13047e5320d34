// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cscal/data.hpp"
#include "cscal/losses.hpp"
#include "cscal/model.hpp"

namespace cscal {

enum class RampKind { sigmoid, linear };

/// Adversarial-weight ramp, 0 at the start of training and approaching 1 at
/// the end. Default is the sigmoid 2/(1+exp(-10 p)) - 1 over training
/// progress p; the linear alternative returns p itself.
double omega(std::size_t step, std::size_t total_steps, RampKind ramp = RampKind::sigmoid);

struct OptimizerState {
  std::vector<Tensor> velocity;
  std::size_t step = 0;
};

/// Classical momentum with coupled weight decay:
/// g' = g + wd*w; v = momentum*v + g'; w -= lr*v.
void sgd_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
              OptimizerState& state, double lr, double momentum, double weight_decay);

struct DataConfig {
  enum class Kind { two_moons, gaussian_mixture, csv };
  Kind kind = Kind::two_moons;
  ShiftSpec shift;
  std::filesystem::path csv_path;
  CsvSchema csv_schema;
};

std::pair<DomainDataset, DomainDataset> make_datasets(const DataConfig& config);

struct TrainConfig {
  std::uint64_t seed = 0;

  std::vector<std::size_t> g_hidden = {64, 32};

  double alpha0 = 1.0;
  double beta = 0.1;
  double gamma = 0.1;
  bool disable_pld = false;
  bool disable_nnd = false;
  bool disable_mi = false;
  bool nnd_normalize = true;
  double pseudo_label_threshold = 0.0;

  double lr = 0.0;  // required; resolve_config rejects configs without it
  double momentum = 0.9;
  double weight_decay = 1e-3;

  RampKind ramp = RampKind::sigmoid;
  std::size_t epochs = 0;  // required
  std::size_t batch_size = 32;
  std::size_t steps_per_epoch = 0;  // 0 = floor(n_source / batch_size), min 1

  DataConfig data;
};

void validate(const TrainConfig& config);

struct EvalResult {
  double accuracy = 0.0;
  std::vector<std::vector<int>> confusion;  // true class x predicted class
  double diag_stat = 0.0;
  double trace_s = 0.0;
  double frobenius = 0.0;
};

/// Full-dataset argmax evaluation against the held-out labels.
EvalResult evaluate(const ModelParams& params_g, const ModelParams& params_c,
                    const DomainDataset& dataset);

struct MetricsRecord {
  std::size_t epoch = 0;
  // Means over the epoch's steps.
  double ce = 0.0, pld_intra = 0.0, pld_inter = 0.0, nnd = 0.0, mi = 0.0, total = 0.0;
  double mean_intra_pairs = 0.0, mean_inter_pairs = 0.0;
  double pair_coverage = 0.0;  // fraction of steps with non-empty inter pairs
  double source_acc = 0.0, target_acc = 0.0;
  std::vector<std::vector<int>> confusion;  // target domain
  double diag_stat_source = 0.0, diag_stat_target = 0.0;
  double trace_s_source = 0.0, trace_s_target = 0.0;
};

struct TrainResult {
  std::vector<MetricsRecord> metrics;
  ModelParams g;
  ModelParams c;
};

/// Runs the adversarial optimization: per step, sample batches, build the
/// objective with alpha = omega(step) * alpha0 and the reversal factor also
/// omega(step), one backward pass, one optimizer step over both networks.
/// Deterministic in config.seed. Throws NumericError with the step index if
/// the loss goes non-finite.
TrainResult train_run(const TrainConfig& config);

struct AblationRow {
  std::string variant;
  MetricsRecord final_metrics;
};

/// Runs {full, w/o pld, w/o nnd, w/o mi, source-only} with a shared seed.
std::vector<AblationRow> ablate(const TrainConfig& config);

/// One JSON object per line: a header record carrying seed and config hash,
/// then one record per epoch.
std::string metrics_to_jsonl(std::span<const MetricsRecord> records, std::uint64_t seed,
                             const std::string& config_hash);

std::string ablation_to_csv(std::span<const AblationRow> rows, std::uint64_t seed,
                            const std::string& config_hash);

/// Writes (feature vector, domain, label, prediction) rows for both domains.
void export_embeddings(const ModelParams& params_g, const ModelParams& params_c,
                       const DomainDataset& source, const DomainDataset& target,
                       const std::filesystem::path& path, std::uint64_t seed,
                       const std::string& config_hash);

}  // namespace cscal
