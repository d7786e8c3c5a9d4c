// Dataset ingestion (CSV and raw IDX images), synthetic generators, and
// deterministic subsampling. All loaders produce uniform-mass clouds.

#pragma once

#include "advot/point_cloud.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace advot {

struct CsvLoadResult {
  LabeledPointCloud cloud;
  std::vector<std::string> class_names;  // class index -> original label
};

/// Numeric CSV with one label column (by header name, or by zero-based index
/// when the string parses as an integer or there is no header). Distinct
/// labels are sorted and remapped to 0..K-1.
CsvLoadResult load_csv(const std::string& path, const std::string& label_column,
                       bool has_header);

/// Raw IDX image/label pair (big-endian headers, magic 0x803 / 0x801).
/// Flattens pixels to feature vectors in [0, 255] and keeps a deterministic
/// per-class sample of size `per_class` (0 = keep everything).
LabeledPointCloud load_idx(const std::string& images_path,
                           const std::string& labels_path, int per_class,
                           std::uint64_t seed);

/// Gaussian blobs: samples_per_class draws from N(mean_i, cov_scale * I) per
/// class, generated counter-based so a seed fixes every coordinate
/// independently of evaluation order.
LabeledPointCloud synth_gaussian(const std::vector<Eigen::VectorXd>& means,
                                 int samples_per_class, double cov_scale,
                                 std::uint64_t seed);

/// The six planar cluster centers used by the synthetic benchmark:
/// (-2,2), (2,2), (6,2), (-2,-2), (2,-2), (6,-2).
std::vector<Eigen::VectorXd> six_cluster_means();

/// Two concentric equilateral triangles, six classes with one point each:
/// inner edge length 1 (circumradius 1/sqrt(3)) centered at the origin, outer
/// vertices on the same rays at corresponding-vertex distance 2.0207.
LabeledPointCloud triangle_fixture();

/// Deterministic per-class subsample of at most per_class points, and/or a
/// restriction to a subset of classes (classes are re-indexed densely).
LabeledPointCloud subsample(const LabeledPointCloud& cloud,
                            const std::optional<std::vector<int>>& classes_filter,
                            int per_class, std::uint64_t seed);

enum class Normalize { None, UnitScale };

/// Declarative dataset description used by the CLI and sweep drivers.
struct DatasetSpec {
  enum class Source { CsvPath, IdxPair, SyntheticGaussian, TrianglePair };
  Source source = Source::TrianglePair;

  // CsvPath
  std::string csv_path;
  std::string label_column = "label";
  bool has_header = true;
  // IdxPair
  std::string images_path;
  std::string labels_path;
  // SyntheticGaussian
  std::vector<Eigen::VectorXd> means;
  int samples_per_class = 30;
  double cov_scale = 1.0;

  std::optional<std::vector<int>> classes_filter;
  int per_class_count = 0;  // 0 = keep everything
  std::uint64_t seed = 0;
  Normalize normalize = Normalize::None;
};

LabeledPointCloud load_dataset(const DatasetSpec& spec);

/// Rescales all features by 1 / (largest absolute coordinate).
LabeledPointCloud unit_scale(const LabeledPointCloud& cloud);

/// Writes a cloud as CSV: feature columns then a trailing integer label.
void write_csv(const LabeledPointCloud& cloud, const std::string& path);

}  // namespace advot
