// Metric kernels and the epsilon-ball common-intersection (witness) test.
//
// Interaction feasibility reduces to asking whether a set of points fits in a
// closed ball of radius eps: for l2 this is a minimum-enclosing-ball problem,
// for linf it is an axis-aligned box intersection.

#pragma once

#include <Eigen/Core>

#include <optional>
#include <string>

namespace advot {

// Points are rows; row-major so per-point access is contiguous.
using PointMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Metric { L2, LInf };

Metric metric_from_string(const std::string& name);
std::string to_string(Metric metric);

// Relative slack applied to "radius <= eps" so boundary ties count as feasible.
inline constexpr double kFeasibilityTolerance = 1e-12;

double distance(const Eigen::Ref<const Eigen::VectorXd>& a,
                const Eigen::Ref<const Eigen::VectorXd>& b, Metric metric);

struct Ball {
  Eigen::VectorXd center;
  double radius = 0.0;
};

/// Exact minimum enclosing ball (Welzl move-to-front, deterministic
/// permutation). Works in any dimension; intended for the small point sets
/// that arise as interaction candidates.
Ball minimum_enclosing_ball(const PointMatrix& points);

/// linf analogue: center of the coordinate-wise bounding box, radius half the
/// largest coordinate range.
Ball bounding_box_ball(const PointMatrix& points);

Ball enclosing_ball(const PointMatrix& points, Metric metric);

struct WitnessResult {
  bool feasible = false;
  std::optional<Eigen::VectorXd> witness;  // set iff feasible
  double radius = 0.0;                     // smallest enclosing radius, always set
};

/// Decides whether all points fit in a common closed eps-ball and, if so,
/// returns the canonical witness (ball center).
WitnessResult common_ball_witness(const PointMatrix& points, double eps,
                                  Metric metric);

}  // namespace advot
