// Shared test helpers: a fully deterministic RNG (independent of any stdlib
// distribution implementation) and small cloud builders.

#pragma once

#include "advot/point_cloud.hpp"

#include <cstdint>
#include <vector>

namespace advot_test {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x853c49e6748fea9bULL) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int index(int n) { return static_cast<int>(next() % static_cast<std::uint64_t>(n)); }

 private:
  std::uint64_t state_;
};

// Random cloud: `num_classes` classes, up to max_per_class points each,
// coordinates in [0, box]^dim, uniform masses.
inline advot::LabeledPointCloud random_cloud(Rng& rng, int num_classes,
                                             int max_per_class, int dim,
                                             double box) {
  std::vector<int> labels;
  std::vector<std::vector<double>> rows;
  for (int cls = 0; cls < num_classes; ++cls) {
    const int count = 1 + rng.index(max_per_class);
    for (int s = 0; s < count; ++s) {
      std::vector<double> row(dim);
      for (int d = 0; d < dim; ++d) row[d] = rng.uniform(0.0, box);
      rows.push_back(std::move(row));
      labels.push_back(cls);
    }
  }
  advot::PointMatrix points(rows.size(), dim);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (int d = 0; d < dim; ++d) points(r, d) = rows[r][d];
  return advot::LabeledPointCloud::create_uniform(std::move(points),
                                                  std::move(labels));
}

}  // namespace advot_test
