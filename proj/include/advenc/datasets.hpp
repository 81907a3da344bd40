#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "advenc/matrix.hpp"

namespace advenc {

// Labeled tabular data. Features live in [0,1]; labels in {0..num_classes-1}.
// Immutable after construction; safe for concurrent reads.
struct Dataset {
  Matrix features;          // n x d
  std::vector<int> labels;  // length n
  int num_classes = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.cols(); }

  void validate() const;  // shapes, [0,1] range, labels in range
  // Additionally requires every class to have at least one sample, as any
  // training split must.
  void validate_training() const;
};

struct SyntheticSpec {
  int num_classes = 2;
  std::size_t dim = 20;
  std::size_t samples_per_class = 1500;
  double class_center_separation = 2.0;  // exact center distance for K=2
  double noise_sigma = 0.1;

  void validate() const;
};

// Class centers sit at 0.5 +/- separation/(2*sqrt(d)) on fixed per-class
// coordinate patterns; the seed drives only the Gaussian noise. Samples are
// clipped to [0,1]. Rows are grouped by class, samples_per_class each.
Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

// For tests: the exact centers generate_synthetic perturbs (K x d).
Matrix synthetic_class_centers(const SyntheticSpec& spec);

struct CsvDataset {
  Dataset dataset;
  std::vector<std::string> feature_names;
  std::vector<double> column_min;  // pre-normalization, per feature column
  std::vector<double> column_max;
};

// Rectangular numeric CSV with a header row; the named label column holds
// integers. Features are min-max normalized per column to [0,1]; constant
// columns map to 0.5.
CsvDataset load_csv(const std::string& path, const std::string& label_column);

// JSON sidecar with per-column normalization parameters.
void write_normalization_sidecar(const CsvDataset& csv, const std::string& path);

// Stratified split, deterministic in seed. Throws if any class would end up
// empty on either side.
std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction, std::uint64_t seed);

// Rows with the given label, order preserved. Throws if the label is out of
// range or absent.
Dataset class_subset(const Dataset& ds, int label);

}  // namespace advenc
