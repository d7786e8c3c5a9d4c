#include "advot/geometry.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace advot {

Metric metric_from_string(const std::string& name) {
  if (name == "l2" || name == "L2") return Metric::L2;
  if (name == "linf" || name == "Linf" || name == "LInf") return Metric::LInf;
  throw std::invalid_argument("unknown metric '" + name + "' (expected l2 or linf)");
}

std::string to_string(Metric metric) {
  return metric == Metric::L2 ? "l2" : "linf";
}

double distance(const Eigen::Ref<const Eigen::VectorXd>& a,
                const Eigen::Ref<const Eigen::VectorXd>& b, Metric metric) {
  if (a.size() != b.size())
    throw std::invalid_argument("distance: dimension mismatch (" +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  switch (metric) {
    case Metric::L2:
      return (a - b).norm();
    case Metric::LInf:
      return (a - b).lpNorm<Eigen::Infinity>();
  }
  throw std::logic_error("distance: unreachable");
}

namespace {

// Relative slack used in Welzl membership checks; keeps the recursion stable
// on near-degenerate boundary configurations.
constexpr double kBallSlack = 1e-12;

bool in_ball(const Eigen::Ref<const Eigen::RowVectorXd>& p, const Ball& ball) {
  if (ball.radius < 0) return false;
  const double d2 = (p.transpose() - ball.center).squaredNorm();
  const double r2 = ball.radius * ball.radius;
  return d2 <= r2 * (1.0 + kBallSlack) + 1e-30;
}

// Smallest ball with every point of `boundary` on its surface and center in
// their affine hull. Handles affinely dependent boundary sets via a
// rank-revealing least-squares solve.
Ball circumscribed_ball(const PointMatrix& points,
                        const std::vector<int>& boundary) {
  const auto dim = points.cols();
  if (boundary.empty()) {
    Ball none;
    none.center = Eigen::VectorXd::Zero(dim);
    none.radius = -1.0;
    return none;
  }
  Ball ball;
  const Eigen::VectorXd base = points.row(boundary[0]).transpose();
  if (boundary.size() == 1) {
    ball.center = base;
    ball.radius = 0.0;
    return ball;
  }
  const int m = static_cast<int>(boundary.size()) - 1;
  Eigen::MatrixXd span(m, dim);
  for (int j = 0; j < m; ++j)
    span.row(j) = points.row(boundary[j + 1]) - points.row(boundary[0]);
  // 2 v_j . (c - q0) = |v_j|^2  with c = q0 + span^T alpha
  Eigen::MatrixXd gram = 2.0 * span * span.transpose();
  Eigen::VectorXd rhs = span.rowwise().squaredNorm();
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(gram);
  Eigen::VectorXd alpha = cod.solve(rhs);
  ball.center = base + span.transpose() * alpha;
  double r = 0.0;
  for (int idx : boundary)
    r = std::max(r, (points.row(idx).transpose() - ball.center).norm());
  ball.radius = r;
  return ball;
}

Ball welzl(const PointMatrix& points, const std::vector<int>& order, size_t n,
           std::vector<int>& boundary, size_t max_boundary) {
  if (n == 0 || boundary.size() == max_boundary)
    return circumscribed_ball(points, boundary);
  const int p = order[n - 1];
  Ball ball = welzl(points, order, n - 1, boundary, max_boundary);
  if (in_ball(points.row(p), ball)) return ball;
  boundary.push_back(p);
  ball = welzl(points, order, n - 1, boundary, max_boundary);
  boundary.pop_back();
  return ball;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

Ball minimum_enclosing_ball(const PointMatrix& points) {
  if (points.rows() == 0)
    throw std::invalid_argument("minimum_enclosing_ball: empty point set");
  const size_t n = static_cast<size_t>(points.rows());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Fixed-seed Fisher-Yates: expected-linear behavior, reproducible output.
  std::uint64_t state = 0x5DEECE66DULL ^ (n * 0x2545F4914F6CDD1DULL);
  for (size_t i = n - 1; i > 0; --i) {
    const size_t j = splitmix64(state) % (i + 1);
    std::swap(order[i], order[j]);
  }
  const size_t max_boundary =
      std::min<size_t>(n, static_cast<size_t>(points.cols()) + 1);
  std::vector<int> boundary;
  Ball ball = welzl(points, order, n, boundary, max_boundary);
  // Report a radius consistent with enclosure of every input point.
  double r = ball.radius;
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    r = std::max(r, (points.row(i).transpose() - ball.center).norm());
  ball.radius = r;
  return ball;
}

Ball bounding_box_ball(const PointMatrix& points) {
  if (points.rows() == 0)
    throw std::invalid_argument("bounding_box_ball: empty point set");
  const Eigen::RowVectorXd lo = points.colwise().minCoeff();
  const Eigen::RowVectorXd hi = points.colwise().maxCoeff();
  Ball ball;
  ball.center = (0.5 * (lo + hi)).transpose();
  ball.radius = points.cols() == 0 ? 0.0 : 0.5 * (hi - lo).maxCoeff();
  return ball;
}

Ball enclosing_ball(const PointMatrix& points, Metric metric) {
  return metric == Metric::L2 ? minimum_enclosing_ball(points)
                              : bounding_box_ball(points);
}

WitnessResult common_ball_witness(const PointMatrix& points, double eps,
                                  Metric metric) {
  if (points.rows() == 0)
    throw std::invalid_argument("common_ball_witness: empty point set");
  if (!(eps > 0))
    throw std::invalid_argument("common_ball_witness: eps must be positive");
  const Ball ball = enclosing_ball(points, metric);
  WitnessResult result;
  result.radius = ball.radius;
  result.feasible = ball.radius <= eps * (1.0 + kFeasibilityTolerance);
  if (result.feasible) result.witness = ball.center;
  return result;
}

}  // namespace advot
