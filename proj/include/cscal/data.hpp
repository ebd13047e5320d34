// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cscal/rng.hpp"
#include "cscal/tensor.hpp"

namespace cscal {

enum class DomainTag { source, target };

/// One domain's samples. Target labels exist for evaluation only; the batch
/// API below never exposes them to the training path.
struct DomainDataset {
  Tensor features;  // N x d
  std::vector<int> labels;
  DomainTag domain = DomainTag::source;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.cols(); }
};

std::size_t num_classes(const DomainDataset& d);

/// Description of a synthetic shifted dataset pair. The target domain is the
/// source manifold pushed through a rotation (or a full affine map plus
/// translation for the mixture generator), sampled independently.
struct ShiftSpec {
  enum class Generator { two_moons, gaussian_mixture };
  Generator generator = Generator::two_moons;
  std::size_t n_per_domain = 500;
  std::size_t k = 2;
  double rotation_deg = 0.0;                    // in [0, 360)
  std::optional<std::array<double, 4>> affine;  // row-major 2x2; overrides rotation_deg
  std::array<double, 2> translation{0.0, 0.0};
  double noise_std = 0.1;
  std::uint64_t seed = 0;
};

void validate(const ShiftSpec& spec);

std::pair<DomainDataset, DomainDataset> gen_two_moons(const ShiftSpec& spec);
std::pair<DomainDataset, DomainDataset> gen_gaussian_mixture(const ShiftSpec& spec);
std::pair<DomainDataset, DomainDataset> generate(const ShiftSpec& spec);

/// CSV ingestion. Header row required; lines starting with '#' are skipped.
/// The domain column holds "source" or "target"; feature columns default to
/// every other column. With `standardize`, features are shifted/scaled by
/// source statistics only.
struct CsvSchema {
  std::string label_column = "label";
  std::string domain_column = "domain";
  std::vector<std::string> feature_columns;  // empty = all remaining columns
  bool standardize = true;
};

std::pair<DomainDataset, DomainDataset> load_csv(const std::filesystem::path& path,
                                                 const CsvSchema& schema = {});

/// Writes both domains into one CSV (x0..x{d-1}, label, domain) preceded by
/// a '#' comment carrying the seed and config hash.
void save_csv(const std::filesystem::path& path, const DomainDataset& source,
              const DomainDataset& target, std::uint64_t seed, const std::string& config_hash);

struct LabeledBatch {
  Tensor x;
  std::vector<int> labels;
  std::vector<std::size_t> indices;
};

/// Label-stripped view handed to the training path.
struct UnlabeledBatch {
  Tensor x;
  std::vector<std::size_t> indices;
};

/// Samples one step's batches: class-balanced round-robin with replacement
/// on the source (so same-label pairs exist), uniform on the target. The
/// counter-based rng state advances explicitly.
std::pair<LabeledBatch, UnlabeledBatch> next_batch(const DomainDataset& source,
                                                   const DomainDataset& target,
                                                   std::size_t batch_size, CounterRng& rng);

}  // namespace cscal
