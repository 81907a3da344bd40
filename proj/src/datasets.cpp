#include "advenc/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "advenc/rng.hpp"
#include "nlohmann/json.hpp"

namespace advenc {

void Dataset::validate() const {
  if (num_classes < 2) throw ConfigError("dataset: num_classes must be >= 2");
  if (features.rows() != labels.size())
    throw ShapeError("dataset: " + std::to_string(features.rows()) + " feature rows vs " +
                     std::to_string(labels.size()) + " labels");
  for (double v : features.values())
    if (!(v >= 0.0 && v <= 1.0))
      throw ConfigError("dataset: feature value " + std::to_string(v) + " outside [0,1]");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int l = labels[i];
    if (l < 0 || l >= num_classes)
      throw ConfigError("dataset: label " + std::to_string(l) + " out of range at row " +
                        std::to_string(i));
  }
}

void Dataset::validate_training() const {
  validate();
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (int l : labels) counts[static_cast<std::size_t>(l)]++;
  for (int c = 0; c < num_classes; ++c)
    if (counts[static_cast<std::size_t>(c)] == 0)
      throw ConfigError("dataset: class " + std::to_string(c) + " has no samples");
}

void SyntheticSpec::validate() const {
  if (num_classes < 2) throw ConfigError("synthetic: num_classes must be >= 2");
  if (dim < 2) throw ConfigError("synthetic: dim must be >= 2");
  if (samples_per_class < 1) throw ConfigError("synthetic: samples_per_class must be >= 1");
  if (!(class_center_separation > 0.0))
    throw ConfigError("synthetic: class_center_separation must be > 0");
  if (class_center_separation > std::sqrt(static_cast<double>(dim)) + 1e-12)
    throw ConfigError("synthetic: separation too large to fit centers in the unit cube");
  if (!(noise_sigma > 0.0)) throw ConfigError("synthetic: noise_sigma must be > 0");
}

Matrix synthetic_class_centers(const SyntheticSpec& spec) {
  const double delta =
      spec.class_center_separation / (2.0 * std::sqrt(static_cast<double>(spec.dim)));
  Matrix centers(static_cast<std::size_t>(spec.num_classes), spec.dim);
  for (int k = 0; k < spec.num_classes; ++k) {
    for (std::size_t j = 0; j < spec.dim; ++j) {
      const bool up = (j % static_cast<std::size_t>(spec.num_classes)) ==
                      static_cast<std::size_t>(k);
      centers(static_cast<std::size_t>(k), j) = 0.5 + (up ? delta : -delta);
    }
  }
  return centers;
}

Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  const Matrix centers = synthetic_class_centers(spec);
  Rng rng(derive_seed(seed, "synthetic-noise"));
  Dataset ds;
  ds.num_classes = spec.num_classes;
  const std::size_t n = spec.samples_per_class * static_cast<std::size_t>(spec.num_classes);
  ds.features = Matrix(n, spec.dim);
  ds.labels.resize(n);
  std::size_t row = 0;
  for (int k = 0; k < spec.num_classes; ++k) {
    for (std::size_t s = 0; s < spec.samples_per_class; ++s, ++row) {
      double* dst = ds.features.row_ptr(row);
      const double* c = centers.row_ptr(static_cast<std::size_t>(k));
      for (std::size_t j = 0; j < spec.dim; ++j) {
        const double v = c[j] + spec.noise_sigma * rng.normal();
        dst[j] = std::clamp(v, 0.0, 1.0);
      }
      ds.labels[row] = k;
    }
  }
  return ds;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& cell, std::size_t row, std::size_t col) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || !std::isfinite(v))
    throw ParseError("csv: non-numeric cell '" + cell + "' at row " + std::to_string(row) +
                     ", column " + std::to_string(col));
  return v;
}

}  // namespace

CsvDataset load_csv(const std::string& path, const std::string& label_column) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open csv: " + path);
  std::string line;
  if (!std::getline(is, line)) throw ParseError("csv: empty file: " + path);
  const std::vector<std::string> header = split_line(line);
  std::size_t label_idx = header.size();
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == label_column) label_idx = i;
  if (label_idx == header.size())
    throw ParseError("csv: unknown label column '" + label_column + "'");
  const std::size_t ncols = header.size();
  if (ncols < 2) throw ParseError("csv: need at least one feature column and the label");

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != ncols)
      throw ParseError("csv: row " + std::to_string(lineno) + " has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(ncols));
    std::vector<double> feat;
    feat.reserve(ncols - 1);
    for (std::size_t c = 0; c < ncols; ++c) {
      const double v = parse_number(cells[c], lineno, c + 1);
      if (c == label_idx) {
        const double r = std::round(v);
        if (std::abs(v - r) > 1e-9 || r < 0)
          throw ParseError("csv: label '" + cells[c] + "' at row " + std::to_string(lineno) +
                           " is not a non-negative integer");
        labels.push_back(static_cast<int>(r));
      } else {
        feat.push_back(v);
      }
    }
    rows.push_back(std::move(feat));
  }
  if (rows.empty()) throw ParseError("csv: no data rows: " + path);

  CsvDataset out;
  for (std::size_t c = 0; c < ncols; ++c)
    if (c != label_idx) out.feature_names.push_back(header[c]);
  const std::size_t d = ncols - 1;
  out.column_min.assign(d, 0.0);
  out.column_max.assign(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    double lo = rows[0][j], hi = rows[0][j];
    for (const auto& r : rows) {
      lo = std::min(lo, r[j]);
      hi = std::max(hi, r[j]);
    }
    out.column_min[j] = lo;
    out.column_max[j] = hi;
  }

  Dataset& ds = out.dataset;
  ds.features = Matrix(rows.size(), d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double* dst = ds.features.row_ptr(i);
    for (std::size_t j = 0; j < d; ++j) {
      const double lo = out.column_min[j], hi = out.column_max[j];
      dst[j] = (hi > lo) ? (rows[i][j] - lo) / (hi - lo) : 0.5;
    }
  }
  ds.labels = std::move(labels);
  const int max_label = *std::max_element(ds.labels.begin(), ds.labels.end());
  ds.num_classes = max_label + 1;
  ds.validate_training();  // rejects gaps in the label range
  return out;
}

void write_normalization_sidecar(const CsvDataset& csv, const std::string& path) {
  nlohmann::json j;
  for (std::size_t i = 0; i < csv.feature_names.size(); ++i) {
    j["columns"].push_back({{"name", csv.feature_names[i]},
                            {"min", csv.column_min[i]},
                            {"max", csv.column_max[i]}});
  }
  std::ofstream os(path);
  if (!os) throw IoError("cannot write sidecar: " + path);
  os << j.dump(2) << "\n";
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ConfigError("split: test_fraction must be in (0,1)");
  ds.validate_training();
  Rng rng(derive_seed(seed, "split"));
  std::vector<std::size_t> train_idx, test_idx;
  for (int c = 0; c < ds.num_classes; ++c) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < ds.labels.size(); ++i)
      if (ds.labels[i] == c) idx.push_back(i);
    const auto n_test = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(idx.size())));
    if (n_test == 0 || n_test >= idx.size())
      throw ConfigError("split: fraction " + std::to_string(test_fraction) +
                        " leaves class " + std::to_string(c) + " empty on one side");
    rng.shuffle(idx);
    test_idx.insert(test_idx.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    train_idx.insert(train_idx.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  auto build = [&](const std::vector<std::size_t>& idx) {
    Dataset out;
    out.num_classes = ds.num_classes;
    out.features = take_rows(ds.features, idx);
    out.labels.reserve(idx.size());
    for (std::size_t i : idx) out.labels.push_back(ds.labels[i]);
    return out;
  };
  return {build(train_idx), build(test_idx)};
}

Dataset class_subset(const Dataset& ds, int label) {
  if (label < 0 || label >= ds.num_classes)
    throw ConfigError("class_subset: label " + std::to_string(label) + " out of range for " +
                      std::to_string(ds.num_classes) + " classes");
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < ds.labels.size(); ++i)
    if (ds.labels[i] == label) idx.push_back(i);
  if (idx.empty())
    throw ConfigError("class_subset: label " + std::to_string(label) + " absent from dataset");
  Dataset out;
  out.num_classes = ds.num_classes;
  out.features = take_rows(ds.features, idx);
  out.labels.assign(idx.size(), label);
  return out;
}

}  // namespace advenc
