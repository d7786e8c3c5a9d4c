#include "advot/point_cloud.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace advot {

Eigen::VectorXd LabeledPointCloud::class_masses(int cls) const {
  const auto& rows = class_points.at(cls);
  Eigen::VectorXd out(rows.size());
  for (size_t l = 0; l < rows.size(); ++l) out[l] = masses[rows[l]];
  return out;
}

std::vector<Eigen::VectorXd> LabeledPointCloud::class_marginals() const {
  std::vector<Eigen::VectorXd> mu(num_classes);
  for (int i = 0; i < num_classes; ++i) mu[i] = class_masses(i);
  return mu;
}

LabeledPointCloud LabeledPointCloud::create(PointMatrix points,
                                            std::vector<int> labels,
                                            Eigen::VectorXd masses) {
  const auto n = points.rows();
  if (n == 0) throw std::invalid_argument("point cloud: no points");
  if (static_cast<Eigen::Index>(labels.size()) != n || masses.size() != n)
    throw std::invalid_argument("point cloud: points/labels/masses size mismatch");

  LabeledPointCloud cloud;
  cloud.points = std::move(points);
  cloud.labels = std::move(labels);
  cloud.masses = std::move(masses);

  int num_classes = 0;
  for (int label : cloud.labels) {
    if (label < 0) throw std::invalid_argument("point cloud: negative class label");
    num_classes = std::max(num_classes, label + 1);
  }
  cloud.num_classes = num_classes;
  cloud.class_points.assign(num_classes, {});
  for (Eigen::Index i = 0; i < n; ++i)
    cloud.class_points[cloud.labels[i]].push_back(static_cast<int>(i));
  for (int i = 0; i < num_classes; ++i)
    if (cloud.class_points[i].empty())
      throw std::invalid_argument("point cloud: class " + std::to_string(i) +
                                  " has no points");

  cloud.row_offsets.resize(num_classes);
  int offset = 0;
  for (int i = 0; i < num_classes; ++i) {
    cloud.row_offsets[i] = offset;
    offset += static_cast<int>(cloud.class_points[i].size());
  }

  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(cloud.masses[i] > 0))
      throw std::invalid_argument("point cloud: masses must be positive");
    total += cloud.masses[i];
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("point cloud: masses sum to " +
                                std::to_string(total) + ", expected 1");
  return cloud;
}

LabeledPointCloud LabeledPointCloud::create_uniform(PointMatrix points,
                                                    std::vector<int> labels) {
  const auto n = points.rows();
  if (n == 0) throw std::invalid_argument("point cloud: no points");
  Eigen::VectorXd masses = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  // Compensate the last entry; Sterbenz makes the sequential sum exactly 1.
  double partial = 0.0;
  for (Eigen::Index i = 0; i + 1 < n; ++i) partial += masses[i];
  masses[n - 1] = 1.0 - partial;
  return create(std::move(points), std::move(labels), std::move(masses));
}

}  // namespace advot
