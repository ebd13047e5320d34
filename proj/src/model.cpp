// SPDX-License-Identifier: Apache-2.0
#include "cscal/model.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "cscal/errors.hpp"
#include "cscal/ops.hpp"
#include "cscal/rng.hpp"

namespace cscal {

void validate(const MlpSpec& spec) {
  if (spec.widths.size() < 2) {
    throw ConfigError("mlp spec needs at least input and output widths");
  }
  for (std::size_t w : spec.widths) {
    if (w < 1) throw ConfigError("mlp widths must be >= 1");
  }
}

ModelParams init_params(const MlpSpec& spec, std::uint64_t seed) {
  validate(spec);
  ModelParams params;
  params.spec = spec;
  params.rng_seed = seed;
  CounterRng rng(seed);
  for (std::size_t layer = 0; layer + 1 < spec.widths.size(); ++layer) {
    const std::size_t fan_in = spec.widths[layer];
    const std::size_t fan_out = spec.widths[layer + 1];
    const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor w = Tensor::zeros(fan_in, fan_out);
    for (std::size_t i = 0; i < w.numel(); ++i) w[i] = rng.next_uniform(-s, s);
    params.weights.push_back(std::move(w));
    params.biases.emplace_back(Shape{fan_out});
  }
  return params;
}

ModelParams bind(Tape& tape, const ModelParams& params) {
  ModelParams bound;
  bound.spec = params.spec;
  bound.rng_seed = params.rng_seed;
  for (const Tensor& w : params.weights) bound.weights.push_back(tape.leaf(w));
  for (const Tensor& b : params.biases) bound.biases.push_back(tape.leaf(b));
  return bound;
}

std::vector<Tensor*> param_tensors(ModelParams& params) {
  std::vector<Tensor*> out;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    out.push_back(&params.weights[l]);
    out.push_back(&params.biases[l]);
  }
  return out;
}

std::vector<const Tensor*> param_tensors(const ModelParams& params) {
  std::vector<const Tensor*> out;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    out.push_back(&params.weights[l]);
    out.push_back(&params.biases[l]);
  }
  return out;
}

std::size_t param_count(const ModelParams& params) {
  std::size_t n = 0;
  for (const Tensor* t : param_tensors(params)) n += t->numel();
  return n;
}

namespace {

void check_input_width(const ModelParams& params, const Tensor& x, const char* who) {
  if (x.cols() != params.spec.widths.front()) {
    throw ContractError(std::string(who) + " input width " + std::to_string(x.cols()) +
                        " does not match model input width " +
                        std::to_string(params.spec.widths.front()));
  }
}

Tensor affine_layer(Tape& tape, const ModelParams& params, std::size_t layer, const Tensor& x) {
  return add_rowwise(tape, matmul(tape, x, params.weights[layer]), params.biases[layer]);
}

}  // namespace

Tensor extract(Tape& tape, const ModelParams& params_g, const Tensor& x) {
  check_input_width(params_g, x, "extract");
  Tensor h = x;
  for (std::size_t layer = 0; layer < params_g.weights.size(); ++layer) {
    h = relu(tape, affine_layer(tape, params_g, layer, h));
  }
  return h;
}

Tensor classify(Tape& tape, const ModelParams& params_c, const Tensor& features,
                std::optional<double> reverse_lambda) {
  check_input_width(params_c, features, "classify");
  Tensor h = features;
  if (reverse_lambda) h = grl(tape, h, *reverse_lambda);
  const std::size_t layers = params_c.weights.size();
  for (std::size_t layer = 0; layer + 1 < layers; ++layer) {
    h = relu(tape, affine_layer(tape, params_c, layer, h));
  }
  Tensor logits = affine_layer(tape, params_c, layers - 1, h);
  return softmax_rows(tape, logits);
}

namespace {

nlohmann::json params_to_json(const ModelParams& params) {
  nlohmann::json j;
  j["widths"] = params.spec.widths;
  j["rng_seed"] = params.rng_seed;
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    nlohmann::json layer;
    layer["w"] = std::vector<double>(params.weights[l].data().begin(), params.weights[l].data().end());
    layer["b"] = std::vector<double>(params.biases[l].data().begin(), params.biases[l].data().end());
    layers.push_back(std::move(layer));
  }
  j["layers"] = std::move(layers);
  return j;
}

ModelParams params_from_json(const nlohmann::json& j) {
  ModelParams params;
  params.spec.widths = j.at("widths").get<std::vector<std::size_t>>();
  validate(params.spec);
  params.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  const auto& layers = j.at("layers");
  if (layers.size() + 1 != params.spec.widths.size()) {
    throw DataError("checkpoint layer count does not match widths");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto w = layers[l].at("w").get<std::vector<double>>();
    auto b = layers[l].at("b").get<std::vector<double>>();
    const std::size_t fan_in = params.spec.widths[l];
    const std::size_t fan_out = params.spec.widths[l + 1];
    if (w.size() != fan_in * fan_out || b.size() != fan_out) {
      throw DataError("checkpoint buffer sizes do not match widths");
    }
    params.weights.push_back(Tensor::matrix(fan_in, fan_out, std::move(w)));
    params.biases.push_back(Tensor(Shape{fan_out}, std::move(b)));
  }
  return params;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelParams& g,
                     const ModelParams& c, std::uint64_t seed, const std::string& config_hash) {
  nlohmann::json j;
  j["format"] = "cscal-checkpoint";
  j["version"] = 1;
  j["seed"] = seed;
  j["config_hash"] = config_hash;
  j["g"] = params_to_json(g);
  j["c"] = params_to_json(c);
  std::ofstream out(path);
  if (!out) throw DataError("cannot open checkpoint for writing: " + path.string());
  out << j.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed checkpoint " + path.string() + ": " + e.what());
  }
  try {
    if (j.at("format") != "cscal-checkpoint") throw DataError("not a checkpoint file");
    Checkpoint ckpt;
    ckpt.seed = j.at("seed").get<std::uint64_t>();
    ckpt.config_hash = j.at("config_hash").get<std::string>();
    ckpt.g = params_from_json(j.at("g"));
    ckpt.c = params_from_json(j.at("c"));
    return ckpt;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed checkpoint " + path.string() + ": " + e.what());
  }
}

}  // namespace cscal
