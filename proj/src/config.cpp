// SPDX-License-Identifier: Apache-2.0
#include "cscal/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "cscal/errors.hpp"

namespace cscal {

namespace {

using nlohmann::json;

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + " must be an object");
}

void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.contains(key)) {
      throw ConfigError("unknown config key: " + (path.empty() ? key : path + "." + key));
    }
  }
}

double get_double(const json& obj, const std::string& path, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(path + "." + key + " must be a number");
  return v.get<double>();
}

double get_required_double(const json& obj, const std::string& path, const char* key) {
  if (!obj.contains(key)) throw ConfigError("missing required key: " + path + "." + key);
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(path + "." + key + " must be a number");
  return v.get<double>();
}

bool get_bool(const json& obj, const std::string& path, const char* key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) throw ConfigError(path + "." + key + " must be a boolean");
  return v.get<bool>();
}

std::uint64_t get_u64(const json& obj, const std::string& path, const char* key,
                      std::uint64_t fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer() && !v.is_number_unsigned()) {
    throw ConfigError(path + "." + key + " must be an integer");
  }
  if (v.is_number_integer() && v.get<std::int64_t>() < 0) {
    throw ConfigError(path + "." + key + " must be non-negative");
  }
  return v.get<std::uint64_t>();
}

std::uint64_t get_required_u64(const json& obj, const std::string& path, const char* key) {
  if (!obj.contains(key)) throw ConfigError("missing required key: " + path + "." + key);
  return get_u64(obj, path, key, 0);
}

std::string get_string(const json& obj, const std::string& path, const char* key,
                       const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) throw ConfigError(path + "." + key + " must be a string");
  return v.get<std::string>();
}

json section(const json& root, const char* name) {
  if (!root.contains(name)) return json::object();
  const json& s = root.at(name);
  require_object(s, name);
  return s;
}

void apply_override(json& root, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override must look like section.key=value, got '" + spec + "'");
  }
  const std::string path = spec.substr(0, eq);
  const std::string text = spec.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;  // unquoted strings are taken verbatim
  }

  std::vector<std::string> parts;
  std::stringstream ss(path);
  std::string part;
  while (std::getline(ss, part, '.')) {
    if (part.empty()) throw ConfigError("override has an empty path segment: '" + spec + "'");
    parts.push_back(part);
  }
  json* cursor = &root;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    json& next = (*cursor)[parts[i]];
    if (next.is_null()) next = json::object();
    if (!next.is_object()) {
      throw ConfigError("override path '" + parts[i] + "' does not name a section");
    }
    cursor = &next;
  }
  (*cursor)[parts.back()] = value;
}

}  // namespace

std::string config_hash_hex(const json& resolved) {
  json j = resolved;
  j.erase("config_hash");
  const std::string text = j.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

ResolvedConfig resolve_config(const json& raw, const std::vector<std::string>& overrides) {
  require_object(raw, "config");
  json root = raw;
  for (const std::string& o : overrides) apply_override(root, o);

  check_keys(root, "",
             {"seed", "config_hash", "model", "losses", "optimizer", "schedule", "data"});

  TrainConfig config;
  config.seed = get_u64(root, "", "seed", 0);

  const json model = section(root, "model");
  check_keys(model, "model", {"g_hidden"});
  if (model.contains("g_hidden")) {
    const json& gh = model.at("g_hidden");
    if (!gh.is_array() || gh.empty()) {
      throw ConfigError("model.g_hidden must be a non-empty array of widths");
    }
    config.g_hidden.clear();
    for (const json& w : gh) {
      if (!w.is_number_integer() && !w.is_number_unsigned()) {
        throw ConfigError("model.g_hidden entries must be integers");
      }
      const std::int64_t v = w.get<std::int64_t>();
      if (v < 1) throw ConfigError("model.g_hidden widths must be >= 1");
      config.g_hidden.push_back(static_cast<std::size_t>(v));
    }
  }

  const json losses = section(root, "losses");
  check_keys(losses, "losses",
             {"alpha0", "beta", "gamma", "disable_pld", "disable_nnd", "disable_mi",
              "nnd_normalize", "pseudo_label_threshold"});
  config.alpha0 = get_double(losses, "losses", "alpha0", 1.0);
  config.beta = get_double(losses, "losses", "beta", 0.1);
  config.gamma = get_double(losses, "losses", "gamma", 0.1);
  config.disable_pld = get_bool(losses, "losses", "disable_pld", false);
  config.disable_nnd = get_bool(losses, "losses", "disable_nnd", false);
  config.disable_mi = get_bool(losses, "losses", "disable_mi", false);
  config.nnd_normalize = get_bool(losses, "losses", "nnd_normalize", true);
  config.pseudo_label_threshold = get_double(losses, "losses", "pseudo_label_threshold", 0.0);

  const json optimizer = section(root, "optimizer");
  check_keys(optimizer, "optimizer", {"lr", "momentum", "weight_decay"});
  config.lr = get_required_double(optimizer, "optimizer", "lr");
  config.momentum = get_double(optimizer, "optimizer", "momentum", 0.9);
  config.weight_decay = get_double(optimizer, "optimizer", "weight_decay", 1e-3);

  const json schedule = section(root, "schedule");
  check_keys(schedule, "schedule", {"ramp", "epochs", "batch_size", "steps_per_epoch"});
  const std::string ramp = get_string(schedule, "schedule", "ramp", "sigmoid");
  if (ramp == "sigmoid") {
    config.ramp = RampKind::sigmoid;
  } else if (ramp == "linear") {
    config.ramp = RampKind::linear;
  } else {
    throw ConfigError("schedule.ramp must be 'sigmoid' or 'linear'");
  }
  config.epochs = get_required_u64(schedule, "schedule", "epochs");
  config.batch_size = get_u64(schedule, "schedule", "batch_size", 32);
  config.steps_per_epoch = get_u64(schedule, "schedule", "steps_per_epoch", 0);

  if (!root.contains("data")) throw ConfigError("missing required key: data.kind");
  const json data = section(root, "data");
  const std::string kind = get_string(data, "data", "kind", "");
  if (kind.empty()) throw ConfigError("missing required key: data.kind");

  if (kind == "two_moons" || kind == "gaussian_mixture") {
    check_keys(data, "data",
               {"kind", "n_per_domain", "k", "rotation_deg", "affine", "translation", "noise_std",
                "seed"});
    config.data.kind = kind == "two_moons" ? DataConfig::Kind::two_moons
                                           : DataConfig::Kind::gaussian_mixture;
    ShiftSpec& spec = config.data.shift;
    spec.generator = kind == "two_moons" ? ShiftSpec::Generator::two_moons
                                         : ShiftSpec::Generator::gaussian_mixture;
    spec.n_per_domain = get_u64(data, "data", "n_per_domain", 500);
    spec.k = get_u64(data, "data", "k", kind == "two_moons" ? 2 : 4);
    spec.rotation_deg = get_double(data, "data", "rotation_deg", 0.0);
    spec.noise_std = get_double(data, "data", "noise_std", 0.1);
    spec.seed = get_u64(data, "data", "seed", config.seed);
    if (data.contains("affine")) {
      const json& a = data.at("affine");
      if (!a.is_array() || a.size() != 2 || !a[0].is_array() || a[0].size() != 2 ||
          !a[1].is_array() || a[1].size() != 2) {
        throw ConfigError("data.affine must be a 2x2 array");
      }
      spec.affine = std::array<double, 4>{a[0][0].get<double>(), a[0][1].get<double>(),
                                          a[1][0].get<double>(), a[1][1].get<double>()};
    }
    if (data.contains("translation")) {
      const json& t = data.at("translation");
      if (!t.is_array() || t.size() != 2) throw ConfigError("data.translation must have 2 entries");
      spec.translation = {t[0].get<double>(), t[1].get<double>()};
    }
    validate(spec);
  } else if (kind == "csv") {
    check_keys(data, "data",
               {"kind", "path", "label_column", "domain_column", "feature_columns", "standardize"});
    config.data.kind = DataConfig::Kind::csv;
    const std::string path = get_string(data, "data", "path", "");
    if (path.empty()) throw ConfigError("missing required key: data.path");
    config.data.csv_path = path;
    config.data.csv_schema.label_column = get_string(data, "data", "label_column", "label");
    config.data.csv_schema.domain_column = get_string(data, "data", "domain_column", "domain");
    config.data.csv_schema.standardize = get_bool(data, "data", "standardize", true);
    if (data.contains("feature_columns")) {
      const json& fc = data.at("feature_columns");
      if (!fc.is_array()) throw ConfigError("data.feature_columns must be an array");
      for (const json& c : fc) {
        if (!c.is_string()) throw ConfigError("data.feature_columns entries must be strings");
        config.data.csv_schema.feature_columns.push_back(c.get<std::string>());
      }
    }
  } else {
    throw ConfigError("data.kind must be 'two_moons', 'gaussian_mixture', or 'csv'");
  }

  validate(config);

  // Canonical resolved form: every default materialized.
  json resolved;
  resolved["seed"] = config.seed;
  resolved["model"] = {{"g_hidden", config.g_hidden}};
  resolved["losses"] = {{"alpha0", config.alpha0},
                        {"beta", config.beta},
                        {"gamma", config.gamma},
                        {"disable_pld", config.disable_pld},
                        {"disable_nnd", config.disable_nnd},
                        {"disable_mi", config.disable_mi},
                        {"nnd_normalize", config.nnd_normalize},
                        {"pseudo_label_threshold", config.pseudo_label_threshold}};
  resolved["optimizer"] = {{"lr", config.lr},
                           {"momentum", config.momentum},
                           {"weight_decay", config.weight_decay}};
  resolved["schedule"] = {{"ramp", config.ramp == RampKind::sigmoid ? "sigmoid" : "linear"},
                          {"epochs", config.epochs},
                          {"batch_size", config.batch_size},
                          {"steps_per_epoch", config.steps_per_epoch}};
  if (config.data.kind == DataConfig::Kind::csv) {
    resolved["data"] = {{"kind", "csv"},
                        {"path", config.data.csv_path.string()},
                        {"label_column", config.data.csv_schema.label_column},
                        {"domain_column", config.data.csv_schema.domain_column},
                        {"feature_columns", config.data.csv_schema.feature_columns},
                        {"standardize", config.data.csv_schema.standardize}};
  } else {
    const ShiftSpec& spec = config.data.shift;
    json d = {{"kind", config.data.kind == DataConfig::Kind::two_moons ? "two_moons"
                                                                       : "gaussian_mixture"},
              {"n_per_domain", spec.n_per_domain},
              {"k", spec.k},
              {"rotation_deg", spec.rotation_deg},
              {"noise_std", spec.noise_std},
              {"seed", spec.seed},
              {"translation", spec.translation}};
    if (spec.affine) {
      d["affine"] = {{(*spec.affine)[0], (*spec.affine)[1]},
                     {(*spec.affine)[2], (*spec.affine)[3]}};
    }
    resolved["data"] = std::move(d);
  }

  ResolvedConfig out;
  out.config = std::move(config);
  out.hash = config_hash_hex(resolved);
  out.resolved = std::move(resolved);
  return out;
}

ResolvedConfig resolve_config_file(const std::filesystem::path& path,
                                   const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path.string());
  json raw;
  try {
    in >> raw;
  } catch (const json::exception& e) {
    throw ConfigError("malformed config " + path.string() + ": " + e.what());
  }
  return resolve_config(raw, overrides);
}

nlohmann::json snapshot_json(const ResolvedConfig& rc) {
  json j = rc.resolved;
  j["config_hash"] = rc.hash;
  return j;
}

}  // namespace cscal
