#include "advot/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace advot {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Uniform double in (0, 1); strictly positive so log() is safe.
double counter_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                       std::uint64_t c) {
  std::uint64_t h = splitmix64(seed ^ splitmix64(a ^ splitmix64(b ^ splitmix64(c))));
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

// Standard normal via Box-Muller on counter-derived uniforms.
double counter_normal(std::uint64_t seed, std::uint64_t cls, std::uint64_t sample,
                      std::uint64_t dim) {
  const double u1 = counter_uniform(seed, cls, sample, 2 * dim);
  const double u2 = counter_uniform(seed, cls, sample, 2 * dim + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Deterministic Fisher-Yates; avoids std::shuffle's unspecified sequence.
void deterministic_shuffle(std::vector<int>& values, std::uint64_t seed) {
  std::uint64_t state = seed;
  for (std::size_t i = values.size(); i > 1; --i) {
    state = splitmix64(state);
    std::swap(values[i - 1], values[state % i]);
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream stream(line);
  while (std::getline(stream, field, ',')) {
    // Trim surrounding whitespace.
    const auto begin = field.find_first_not_of(" \t\r");
    const auto end = field.find_last_not_of(" \t\r");
    fields.push_back(begin == std::string::npos
                         ? std::string()
                         : field.substr(begin, end - begin + 1));
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::uint32_t read_be32(std::istream& in) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  if (!in) throw std::runtime_error("idx: truncated header");
  return (static_cast<std::uint32_t>(bytes[0]) << 24) |
         (static_cast<std::uint32_t>(bytes[1]) << 16) |
         (static_cast<std::uint32_t>(bytes[2]) << 8) |
         static_cast<std::uint32_t>(bytes[3]);
}

}  // namespace

CsvLoadResult load_csv(const std::string& path, const std::string& label_column,
                       bool has_header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open " + path);

  std::string line;
  int label_index = -1;
  std::vector<std::string> header;
  if (has_header) {
    if (!std::getline(in, line)) throw std::runtime_error("load_csv: empty file");
    header = split_csv_line(line);
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == label_column) label_index = static_cast<int>(i);
  }
  if (label_index < 0) {
    try {
      label_index = std::stoi(label_column);
    } catch (const std::exception&) {
      throw std::runtime_error("load_csv: label column '" + label_column +
                               "' not found");
    }
  }

  std::vector<std::vector<double>> features;
  std::vector<std::string> raw_labels;
  int row_number = has_header ? 1 : 0;
  while (std::getline(in, line)) {
    ++row_number;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (label_index >= static_cast<int>(fields.size()))
      throw std::runtime_error("load_csv: row " + std::to_string(row_number) +
                               " has no label column");
    std::vector<double> feature;
    feature.reserve(fields.size() - 1);
    for (int i = 0; i < static_cast<int>(fields.size()); ++i) {
      if (i == label_index) continue;
      try {
        std::size_t consumed = 0;
        feature.push_back(std::stod(fields[i], &consumed));
        if (consumed != fields[i].size()) throw std::invalid_argument(fields[i]);
      } catch (const std::exception&) {
        throw std::runtime_error("load_csv: malformed numeric field at row " +
                                 std::to_string(row_number));
      }
    }
    if (!features.empty() && feature.size() != features.front().size())
      throw std::runtime_error("load_csv: inconsistent column count at row " +
                               std::to_string(row_number));
    features.push_back(std::move(feature));
    raw_labels.push_back(fields[label_index]);
  }
  if (features.empty()) throw std::runtime_error("load_csv: no data rows");

  // Sorted distinct labels -> 0..K-1.
  std::vector<std::string> names(raw_labels);
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  std::map<std::string, int> remap;
  for (std::size_t i = 0; i < names.size(); ++i) remap[names[i]] = static_cast<int>(i);

  PointMatrix points(features.size(), features.front().size());
  std::vector<int> labels(features.size());
  for (std::size_t r = 0; r < features.size(); ++r) {
    for (std::size_t c = 0; c < features[r].size(); ++c) points(r, c) = features[r][c];
    labels[r] = remap[raw_labels[r]];
  }
  CsvLoadResult result;
  result.cloud = LabeledPointCloud::create_uniform(std::move(points), std::move(labels));
  result.class_names = std::move(names);
  return result;
}

LabeledPointCloud load_idx(const std::string& images_path,
                           const std::string& labels_path, int per_class,
                           std::uint64_t seed) {
  std::ifstream images(images_path, std::ios::binary);
  if (!images) throw std::runtime_error("load_idx: cannot open " + images_path);
  std::ifstream labels(labels_path, std::ios::binary);
  if (!labels) throw std::runtime_error("load_idx: cannot open " + labels_path);

  if (read_be32(images) != 0x00000803u)
    throw std::runtime_error("load_idx: bad image magic number");
  const std::uint32_t image_count = read_be32(images);
  const std::uint32_t rows = read_be32(images);
  const std::uint32_t cols = read_be32(images);

  if (read_be32(labels) != 0x00000801u)
    throw std::runtime_error("load_idx: bad label magic number");
  const std::uint32_t label_count = read_be32(labels);
  if (label_count != image_count)
    throw std::runtime_error("load_idx: image/label count mismatch");

  const std::size_t dim = static_cast<std::size_t>(rows) * cols;
  std::vector<unsigned char> pixels(dim);
  PointMatrix points(image_count, dim);
  std::vector<int> raw_labels(image_count);
  for (std::uint32_t i = 0; i < image_count; ++i) {
    images.read(reinterpret_cast<char*>(pixels.data()), pixels.size());
    if (!images) throw std::runtime_error("load_idx: truncated image data");
    for (std::size_t d = 0; d < dim; ++d)
      points(i, d) = static_cast<double>(pixels[d]);
    char label = 0;
    labels.read(&label, 1);
    if (!labels) throw std::runtime_error("load_idx: truncated label data");
    raw_labels[i] = static_cast<unsigned char>(label);
  }

  auto cloud = LabeledPointCloud::create_uniform(std::move(points), std::move(raw_labels));
  if (per_class > 0) cloud = subsample(cloud, std::nullopt, per_class, seed);
  return cloud;
}

LabeledPointCloud synth_gaussian(const std::vector<Eigen::VectorXd>& means,
                                 int samples_per_class, double cov_scale,
                                 std::uint64_t seed) {
  if (means.empty()) throw std::invalid_argument("synth_gaussian: no means");
  if (samples_per_class < 1)
    throw std::invalid_argument("synth_gaussian: samples_per_class must be >= 1");
  const auto dim = means.front().size();
  for (const auto& mean : means)
    if (mean.size() != dim)
      throw std::invalid_argument("synth_gaussian: inconsistent mean dimension");

  const int num_classes = static_cast<int>(means.size());
  const double stddev = std::sqrt(cov_scale);
  PointMatrix points(num_classes * samples_per_class, dim);
  std::vector<int> labels(num_classes * samples_per_class);
  int row = 0;
  for (int cls = 0; cls < num_classes; ++cls) {
    for (int s = 0; s < samples_per_class; ++s, ++row) {
      labels[row] = cls;
      for (Eigen::Index d = 0; d < dim; ++d)
        points(row, d) = means[cls][d] + stddev * counter_normal(seed, cls, s, d);
    }
  }
  return LabeledPointCloud::create_uniform(std::move(points), std::move(labels));
}

std::vector<Eigen::VectorXd> six_cluster_means() {
  const double xs[] = {-2, 2, 6, -2, 2, 6};
  const double ys[] = {2, 2, 2, -2, -2, -2};
  std::vector<Eigen::VectorXd> means(6);
  for (int i = 0; i < 6; ++i) {
    means[i].resize(2);
    means[i] << xs[i], ys[i];
  }
  return means;
}

LabeledPointCloud triangle_fixture() {
  const double circumradius = 1.0 / std::sqrt(3.0);
  const double scale = 1.0 + 2.0207 / circumradius;  // outer vertex on the same ray
  PointMatrix points(6, 2);
  std::vector<int> labels(6);
  for (int v = 0; v < 3; ++v) {
    const double angle = std::numbers::pi / 2.0 + 2.0 * std::numbers::pi * v / 3.0;
    points(v, 0) = circumradius * std::cos(angle);
    points(v, 1) = circumradius * std::sin(angle);
    points(v + 3, 0) = scale * points(v, 0);
    points(v + 3, 1) = scale * points(v, 1);
    labels[v] = v;
    labels[v + 3] = v + 3;
  }
  return LabeledPointCloud::create_uniform(std::move(points), std::move(labels));
}

LabeledPointCloud subsample(const LabeledPointCloud& cloud,
                            const std::optional<std::vector<int>>& classes_filter,
                            int per_class, std::uint64_t seed) {
  std::vector<int> classes;
  if (classes_filter) {
    classes = *classes_filter;
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    for (int cls : classes)
      if (cls < 0 || cls >= cloud.num_classes)
        throw std::invalid_argument("subsample: class filter out of range");
  } else {
    for (int cls = 0; cls < cloud.num_classes; ++cls) classes.push_back(cls);
  }

  std::vector<int> keep;
  for (std::size_t new_cls = 0; new_cls < classes.size(); ++new_cls) {
    const int cls = classes[new_cls];
    std::vector<int> rows = cloud.class_points[cls];
    if (per_class > 0 && per_class < static_cast<int>(rows.size())) {
      deterministic_shuffle(rows, splitmix64(seed ^ (0x9E3779B97F4A7C15ULL * (cls + 1))));
      rows.resize(per_class);
      std::sort(rows.begin(), rows.end());
    }
    keep.insert(keep.end(), rows.begin(), rows.end());
  }

  std::vector<int> new_label_of(cloud.num_classes, -1);
  for (std::size_t i = 0; i < classes.size(); ++i) new_label_of[classes[i]] = static_cast<int>(i);

  PointMatrix points(keep.size(), cloud.dim());
  std::vector<int> labels(keep.size());
  for (std::size_t r = 0; r < keep.size(); ++r) {
    points.row(r) = cloud.points.row(keep[r]);
    labels[r] = new_label_of[cloud.labels[keep[r]]];
  }
  return LabeledPointCloud::create_uniform(std::move(points), std::move(labels));
}

LabeledPointCloud unit_scale(const LabeledPointCloud& cloud) {
  const double peak = cloud.points.cwiseAbs().maxCoeff();
  if (peak == 0.0) return cloud;
  LabeledPointCloud scaled = cloud;
  scaled.points /= peak;
  return scaled;
}

LabeledPointCloud load_dataset(const DatasetSpec& spec) {
  LabeledPointCloud cloud;
  switch (spec.source) {
    case DatasetSpec::Source::CsvPath:
      cloud = load_csv(spec.csv_path, spec.label_column, spec.has_header).cloud;
      break;
    case DatasetSpec::Source::IdxPair:
      cloud = load_idx(spec.images_path, spec.labels_path, 0, spec.seed);
      break;
    case DatasetSpec::Source::SyntheticGaussian:
      cloud = synth_gaussian(spec.means.empty() ? six_cluster_means() : spec.means,
                             spec.samples_per_class, spec.cov_scale, spec.seed);
      break;
    case DatasetSpec::Source::TrianglePair:
      cloud = triangle_fixture();
      break;
  }
  if (spec.classes_filter || spec.per_class_count > 0)
    cloud = subsample(cloud, spec.classes_filter, spec.per_class_count, spec.seed);
  if (spec.normalize == Normalize::UnitScale) cloud = unit_scale(cloud);
  return cloud;
}

void write_csv(const LabeledPointCloud& cloud, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv: cannot open " + path);
  for (int d = 0; d < cloud.dim(); ++d) out << "x" << d << ",";
  out << "label\n";
  char buffer[64];
  for (int r = 0; r < cloud.size(); ++r) {
    for (int d = 0; d < cloud.dim(); ++d) {
      std::snprintf(buffer, sizeof(buffer), "%.17g", cloud.points(r, d));
      out << buffer << ",";
    }
    out << cloud.labels[r] << "\n";
  }
}

}  // namespace advot
