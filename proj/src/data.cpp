// SPDX-License-Identifier: Apache-2.0
#include "cscal/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "cscal/errors.hpp"

namespace cscal {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kMixtureRadius = 3.0;

struct Affine2 {
  std::array<double, 4> m;  // row-major
  std::array<double, 2> t;

  void apply(double& x, double& y) const {
    const double nx = m[0] * x + m[1] * y + t[0];
    const double ny = m[2] * x + m[3] * y + t[1];
    x = nx;
    y = ny;
  }
};

Affine2 shift_map(const ShiftSpec& spec) {
  if (spec.affine) {
    return Affine2{*spec.affine, spec.translation};
  }
  const double rad = spec.rotation_deg * kPi / 180.0;
  return Affine2{{std::cos(rad), -std::sin(rad), std::sin(rad), std::cos(rad)}, spec.translation};
}

}  // namespace

std::size_t num_classes(const DomainDataset& d) {
  int mx = -1;
  for (int y : d.labels) mx = std::max(mx, y);
  return static_cast<std::size_t>(mx + 1);
}

void validate(const ShiftSpec& spec) {
  if (spec.n_per_domain == 0) throw ConfigError("n_per_domain must be positive");
  if (spec.noise_std < 0.0) throw ConfigError("noise_std must be non-negative");
  if (spec.rotation_deg < 0.0 || spec.rotation_deg >= 360.0) {
    throw ConfigError("rotation_deg must lie in [0, 360)");
  }
  if (spec.generator == ShiftSpec::Generator::two_moons && spec.k != 2) {
    throw ConfigError("the two-moons generator requires k = 2");
  }
  if (spec.generator == ShiftSpec::Generator::gaussian_mixture && spec.k < 2) {
    throw ConfigError("the gaussian-mixture generator requires k >= 2");
  }
  if (spec.affine) {
    const auto& m = *spec.affine;
    const double det = m[0] * m[3] - m[1] * m[2];
    if (std::abs(det) < 1e-12) throw ConfigError("affine matrix is singular");
  }
}

namespace {

// Interleaved half-moons: class 0 on the upper arc, class 1 on the lower,
// offset so the arcs interlock.
DomainDataset sample_moons(std::size_t n, double noise_std, CounterRng& rng, DomainTag tag) {
  DomainDataset d;
  d.domain = tag;
  d.features = Tensor::zeros(n, 2);
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    const double t = rng.next_double() * kPi;
    double x, y;
    if (label == 0) {
      x = std::cos(t);
      y = std::sin(t);
    } else {
      x = 1.0 - std::cos(t);
      y = 0.5 - std::sin(t);
    }
    x += noise_std * rng.next_normal();
    y += noise_std * rng.next_normal();
    d.features.at(i, 0) = x;
    d.features.at(i, 1) = y;
    d.labels[i] = label;
  }
  return d;
}

DomainDataset sample_mixture(std::size_t n, std::size_t k, double noise_std, CounterRng& rng,
                             DomainTag tag) {
  DomainDataset d;
  d.domain = tag;
  d.features = Tensor::zeros(n, 2);
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % k);
    const double angle = 2.0 * kPi * static_cast<double>(label) / static_cast<double>(k);
    d.features.at(i, 0) = kMixtureRadius * std::cos(angle) + noise_std * rng.next_normal();
    d.features.at(i, 1) = kMixtureRadius * std::sin(angle) + noise_std * rng.next_normal();
    d.labels[i] = label;
  }
  return d;
}

void apply_map(DomainDataset& d, const Affine2& map) {
  for (std::size_t i = 0; i < d.size(); ++i) {
    map.apply(d.features.at(i, 0), d.features.at(i, 1));
  }
}

}  // namespace

std::pair<DomainDataset, DomainDataset> gen_two_moons(const ShiftSpec& spec) {
  validate(spec);
  if (spec.generator != ShiftSpec::Generator::two_moons) {
    throw ConfigError("gen_two_moons called with a different generator kind");
  }
  CounterRng source_rng(spec.seed, 0);
  CounterRng target_rng(spec.seed, 1);
  DomainDataset source = sample_moons(spec.n_per_domain, spec.noise_std, source_rng, DomainTag::source);
  DomainDataset target = sample_moons(spec.n_per_domain, spec.noise_std, target_rng, DomainTag::target);
  apply_map(target, shift_map(spec));
  return {std::move(source), std::move(target)};
}

std::pair<DomainDataset, DomainDataset> gen_gaussian_mixture(const ShiftSpec& spec) {
  validate(spec);
  if (spec.generator != ShiftSpec::Generator::gaussian_mixture) {
    throw ConfigError("gen_gaussian_mixture called with a different generator kind");
  }
  CounterRng source_rng(spec.seed, 0);
  CounterRng target_rng(spec.seed, 1);
  DomainDataset source =
      sample_mixture(spec.n_per_domain, spec.k, spec.noise_std, source_rng, DomainTag::source);
  DomainDataset target =
      sample_mixture(spec.n_per_domain, spec.k, spec.noise_std, target_rng, DomainTag::target);
  apply_map(target, shift_map(spec));
  return {std::move(source), std::move(target)};
}

std::pair<DomainDataset, DomainDataset> generate(const ShiftSpec& spec) {
  return spec.generator == ShiftSpec::Generator::two_moons ? gen_two_moons(spec)
                                                           : gen_gaussian_mixture(spec);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::pair<DomainDataset, DomainDataset> load_csv(const std::filesystem::path& path,
                                                 const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open csv: " + path.string());

  std::string line;
  std::size_t line_no = 0;
  // Header (after any comment lines).
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line[0] == '#') continue;
    header = split_csv_line(line);
    for (auto& h : header) h = trim(h);
    break;
  }
  if (header.empty()) throw DataError("csv has no header row: " + path.string());

  auto column_of = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw DataError("csv is missing column '" + name + "': " + path.string());
    }
    return static_cast<std::size_t>(it - header.begin());
  };

  const std::size_t label_col = column_of(schema.label_column);
  const std::size_t domain_col = column_of(schema.domain_column);
  std::vector<std::size_t> feature_cols;
  if (schema.feature_columns.empty()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i != label_col && i != domain_col) feature_cols.push_back(i);
    }
  } else {
    for (const auto& name : schema.feature_columns) feature_cols.push_back(column_of(name));
  }
  if (feature_cols.empty()) throw DataError("csv has no feature columns: " + path.string());

  struct Rows {
    std::vector<double> features;
    std::vector<int> labels;
  };
  Rows source_rows, target_rows;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw DataError("csv line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    const std::string domain = trim(fields[domain_col]);
    Rows* rows = nullptr;
    if (domain == "source") {
      rows = &source_rows;
    } else if (domain == "target") {
      rows = &target_rows;
    } else {
      throw DataError("csv line " + std::to_string(line_no) + ": domain must be 'source' or 'target', got '" +
                      domain + "'");
    }
    try {
      for (std::size_t c : feature_cols) rows->features.push_back(std::stod(trim(fields[c])));
      const std::string label_text = trim(fields[label_col]);
      std::size_t consumed = 0;
      const int label = std::stoi(label_text, &consumed);
      if (consumed != label_text.size() || label < 0) throw std::invalid_argument(label_text);
      rows->labels.push_back(label);
    } catch (const std::exception&) {
      throw DataError("csv line " + std::to_string(line_no) + ": unparsable value");
    }
  }

  const std::size_t d = feature_cols.size();
  auto to_dataset = [&](Rows& rows, DomainTag tag) {
    DomainDataset ds;
    ds.domain = tag;
    ds.features = Tensor(Shape{rows.labels.size(), d}, std::move(rows.features));
    ds.labels = std::move(rows.labels);
    return ds;
  };
  DomainDataset source = to_dataset(source_rows, DomainTag::source);
  DomainDataset target = to_dataset(target_rows, DomainTag::target);

  // Target labels must stay inside the source label set.
  int source_max = -1;
  for (int y : source.labels) source_max = std::max(source_max, y);
  for (std::size_t i = 0; i < target.labels.size(); ++i) {
    if (target.labels[i] > source_max) {
      throw DataError("target label " + std::to_string(target.labels[i]) +
                      " does not occur in the source label set");
    }
  }

  if (schema.standardize && source.size() > 0) {
    for (std::size_t j = 0; j < d; ++j) {
      double mean = 0.0;
      for (std::size_t i = 0; i < source.size(); ++i) mean += source.features.at(i, j);
      mean /= static_cast<double>(source.size());
      double var = 0.0;
      for (std::size_t i = 0; i < source.size(); ++i) {
        const double c = source.features.at(i, j) - mean;
        var += c * c;
      }
      var /= static_cast<double>(source.size());
      const double sd = std::sqrt(var);
      const double scale = sd > 1e-12 ? 1.0 / sd : 1.0;
      for (std::size_t i = 0; i < source.size(); ++i) {
        source.features.at(i, j) = (source.features.at(i, j) - mean) * scale;
      }
      for (std::size_t i = 0; i < target.size(); ++i) {
        target.features.at(i, j) = (target.features.at(i, j) - mean) * scale;
      }
    }
  }
  return {std::move(source), std::move(target)};
}

void save_csv(const std::filesystem::path& path, const DomainDataset& source,
              const DomainDataset& target, std::uint64_t seed, const std::string& config_hash) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open csv for writing: " + path.string());
  out << "# seed=" << seed << " config_hash=" << config_hash << '\n';
  const std::size_t d = source.dim();
  for (std::size_t j = 0; j < d; ++j) out << 'x' << j << ',';
  out << "label,domain\n";
  out.precision(17);
  auto dump = [&](const DomainDataset& ds, const char* tag) {
    for (std::size_t i = 0; i < ds.size(); ++i) {
      for (std::size_t j = 0; j < d; ++j) out << ds.features.at(i, j) << ',';
      out << ds.labels[i] << ',' << tag << '\n';
    }
  };
  dump(source, "source");
  dump(target, "target");
}

std::pair<LabeledBatch, UnlabeledBatch> next_batch(const DomainDataset& source,
                                                   const DomainDataset& target,
                                                   std::size_t batch_size, CounterRng& rng) {
  if (batch_size == 0) throw ContractError("batch_size must be positive");
  if (batch_size > source.size() || batch_size > target.size()) {
    throw ContractError("batch_size exceeds a dataset size");
  }

  const std::size_t k = num_classes(source);
  std::vector<std::vector<std::size_t>> by_class(k);
  for (std::size_t i = 0; i < source.size(); ++i) {
    by_class[static_cast<std::size_t>(source.labels[i])].push_back(i);
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (by_class[c].empty()) {
      throw DataError("source class " + std::to_string(c) + " has no samples");
    }
  }

  LabeledBatch sb;
  sb.x = Tensor::zeros(batch_size, source.dim());
  sb.labels.resize(batch_size);
  sb.indices.resize(batch_size);
  for (std::size_t slot = 0; slot < batch_size; ++slot) {
    const std::size_t cls = slot % k;  // round-robin over classes
    const auto& pool = by_class[cls];
    const std::size_t idx = pool[rng.next_below(pool.size())];
    sb.indices[slot] = idx;
    sb.labels[slot] = source.labels[idx];
    for (std::size_t j = 0; j < source.dim(); ++j) sb.x.at(slot, j) = source.features.at(idx, j);
  }

  UnlabeledBatch tb;
  tb.x = Tensor::zeros(batch_size, target.dim());
  tb.indices.resize(batch_size);
  for (std::size_t slot = 0; slot < batch_size; ++slot) {
    const std::size_t idx = rng.next_below(target.size());
    tb.indices[slot] = idx;
    for (std::size_t j = 0; j < target.dim(); ++j) tb.x.at(slot, j) = target.features.at(idx, j);
  }
  return {std::move(sb), std::move(tb)};
}

}  // namespace cscal
