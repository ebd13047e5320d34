// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cscal/tape.hpp"
#include "cscal/tensor.hpp"

namespace cscal {

/// Layer widths input -> hidden... -> output. At least two entries, all >= 1.
struct MlpSpec {
  std::vector<std::size_t> widths;
};

void validate(const MlpSpec& spec);

/// Per-layer weights [w_i x w_{i+1}] and biases [w_{i+1}], plus the seed the
/// buffers were drawn from. Reinitializing with the same seed reproduces the
/// buffers bit-identically.
struct ModelParams {
  MlpSpec spec;
  std::vector<Tensor> weights;
  std::vector<Tensor> biases;
  std::uint64_t rng_seed = 0;
};

/// Xavier-uniform weights (s = sqrt(6 / (fan_in + fan_out))), zero biases.
ModelParams init_params(const MlpSpec& spec, std::uint64_t seed);

/// Copy of `params` whose tensors are recorded as tape leaves, so one
/// backward pass yields a gradient per tensor.
ModelParams bind(Tape& tape, const ModelParams& params);

/// Flat view over all parameter tensors, layer by layer (w0, b0, w1, b1...).
std::vector<Tensor*> param_tensors(ModelParams& params);
std::vector<const Tensor*> param_tensors(const ModelParams& params);
std::size_t param_count(const ModelParams& params);

/// Feature extractor: x W + b with relu after every layer; the returned
/// features are post-activation.
Tensor extract(Tape& tape, const ModelParams& params_g, const Tensor& x);

/// Classifier: relu between hidden layers, linear final layer, row softmax.
/// When reverse_lambda is present the input passes through a gradient
/// reversal first, so adversarial losses can route sign-flipped gradients to
/// the extractor while the classifier itself trains unreversed.
Tensor classify(Tape& tape, const ModelParams& params_c, const Tensor& features,
                std::optional<double> reverse_lambda = std::nullopt);

/// Checkpoint I/O. JSON layout (documented in the README): format tag,
/// version, seed, config hash, and per-model widths plus raw buffers.
/// Doubles round-trip exactly.
void save_checkpoint(const std::filesystem::path& path, const ModelParams& g,
                     const ModelParams& c, std::uint64_t seed, const std::string& config_hash);

struct Checkpoint {
  ModelParams g;
  ModelParams c;
  std::uint64_t seed = 0;
  std::string config_hash;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cscal
