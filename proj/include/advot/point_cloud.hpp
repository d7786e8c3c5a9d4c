// Labeled empirical measures: finite feature points with class labels and
// per-point masses summing to one.

#pragma once

#include "advot/geometry.hpp"

#include <Eigen/Core>

#include <vector>

namespace advot {

struct LabeledPointCloud {
  PointMatrix points;                           // N x dim
  std::vector<int> labels;                      // size N, values in 0..K-1
  Eigen::VectorXd masses;                       // size N, positive, sums to 1
  int num_classes = 0;                          // K
  std::vector<std::vector<int>> class_points;   // per class: global row indices
  std::vector<int> row_offsets;                 // per class: first row in (class, local) order

  int size() const { return static_cast<int>(points.rows()); }
  int dim() const { return static_cast<int>(points.cols()); }
  int class_size(int cls) const { return static_cast<int>(class_points[cls].size()); }

  /// Global point index of local point `local` of class `cls`.
  int global_index(int cls, int local) const { return class_points[cls][local]; }

  /// Row of the marginal vector / interaction matrix for (cls, local).
  int row_index(int cls, int local) const { return row_offsets[cls] + local; }

  /// Mass vector of class `cls` in local-index order.
  Eigen::VectorXd class_masses(int cls) const;

  /// Per-class mass vectors (the marginals mu_1..mu_K).
  std::vector<Eigen::VectorXd> class_marginals() const;

  /// Validates invariants and builds the per-class index.
  static LabeledPointCloud create(PointMatrix points, std::vector<int> labels,
                                  Eigen::VectorXd masses);

  /// Uniform masses 1/N with a compensated final entry so they sum to 1.
  static LabeledPointCloud create_uniform(PointMatrix points,
                                          std::vector<int> labels);
};

}  // namespace advot
