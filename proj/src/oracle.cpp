#include "advot/oracle.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace advot::oracle {

namespace {

using Members = std::vector<std::pair<int, int>>;

// Enumerates label subsets of size <= level and, within each, all point
// tuples.
void enumerate_tuples(const LabeledPointCloud& cloud, double eps, Metric metric,
                      int level, std::size_t tuple_guard,
                      std::map<std::vector<int>, std::vector<Interaction>>& found) {
  const int num_classes = cloud.num_classes;
  std::size_t inspected = 0;

  std::vector<int> labels;
  auto visit_label_set = [&](auto&& self, int next_class) -> void {
    if (!labels.empty()) {
      // All point tuples for this label set.
      std::vector<int> locals(labels.size(), 0);
      while (true) {
        if (++inspected > tuple_guard)
          throw std::runtime_error(
              "brute_force_interactions: tuple guard exceeded");
        PointMatrix pts(labels.size(), cloud.dim());
        Members members(labels.size());
        for (std::size_t r = 0; r < labels.size(); ++r) {
          members[r] = {labels[r], locals[r]};
          pts.row(r) =
              cloud.points.row(cloud.global_index(labels[r], locals[r]));
        }
        const WitnessResult witness = common_ball_witness(pts, eps, metric);
        if (witness.feasible) {
          Interaction inter;
          inter.members = members;
          inter.witness = *witness.witness;
          found[labels].push_back(std::move(inter));
        }
        // Advance the mixed-radix counter over point choices.
        int pos = static_cast<int>(labels.size()) - 1;
        while (pos >= 0 && ++locals[pos] == cloud.class_size(labels[pos])) {
          locals[pos] = 0;
          --pos;
        }
        if (pos < 0) break;
      }
    }
    if (static_cast<int>(labels.size()) == level) return;
    for (int cls = next_class; cls < num_classes; ++cls) {
      labels.push_back(cls);
      self(self, cls + 1);
      labels.pop_back();
    }
  };
  visit_label_set(visit_label_set, 0);
}

}  // namespace

InteractionComplex brute_force_interactions(const LabeledPointCloud& cloud,
                                            double eps, Metric metric, int level,
                                            std::size_t tuple_guard) {
  if (!(eps > 0))
    throw std::invalid_argument("brute_force_interactions: eps must be positive");
  if (level < 1)
    throw std::invalid_argument("brute_force_interactions: level must be >= 1");
  level = std::min(level, cloud.num_classes);

  std::map<std::vector<int>, std::vector<Interaction>> found;
  enumerate_tuples(cloud, eps, metric, level, tuple_guard, found);

  InteractionComplex complex;
  complex.eps = eps;
  complex.metric = metric;
  complex.level = level;
  for (auto& [labels, interactions] : found) {
    InteractionGroup group;
    group.labels = labels;
    group.interactions = std::move(interactions);
    std::sort(group.interactions.begin(), group.interactions.end(),
              [](const Interaction& a, const Interaction& b) {
                return a.members < b.members;
              });
    complex.groups.push_back(std::move(group));
  }
  std::sort(complex.groups.begin(), complex.groups.end(),
            [](const InteractionGroup& a, const InteractionGroup& b) {
              if (a.labels.size() != b.labels.size())
                return a.labels.size() < b.labels.size();
              return a.labels < b.labels;
            });
  return complex;
}

namespace {

using RationalMatrix = std::vector<std::vector<Rational>>;

// Reduced row echelon elimination; returns pivot columns.
std::vector<int> rref(RationalMatrix& m) {
  const int rows = static_cast<int>(m.size());
  const int cols = rows ? static_cast<int>(m[0].size()) : 0;
  std::vector<int> pivots;
  int row = 0;
  for (int col = 0; col < cols && row < rows; ++col) {
    int pivot = -1;
    for (int r = row; r < rows; ++r)
      if (m[r][col] != 0) {
        pivot = r;
        break;
      }
    if (pivot < 0) continue;
    std::swap(m[row], m[pivot]);
    const Rational inv = m[row][col];
    for (int c = col; c < cols; ++c) m[row][c] /= inv;
    for (int r = 0; r < rows; ++r) {
      if (r == row || m[r][col] == 0) continue;
      const Rational factor = m[r][col];
      for (int c = col; c < cols; ++c) m[r][c] -= factor * m[row][c];
    }
    pivots.push_back(col);
    ++row;
  }
  return pivots;
}

}  // namespace

RationalLpSolution exact_lp(const LpProblem& problem,
                            const std::vector<Rational>& marginals) {
  const int rows = static_cast<int>(problem.interaction_matrix.rows());
  const int cols = static_cast<int>(problem.interaction_matrix.cols());
  if (cols > 12)
    throw std::invalid_argument("exact_lp: column guard exceeded (max 12)");
  if (static_cast<int>(marginals.size()) != rows)
    throw std::invalid_argument("exact_lp: marginal size mismatch");

  RationalMatrix matrix(rows, std::vector<Rational>(cols, Rational(0)));
  for (int j = 0; j < cols; ++j)
    for (Eigen::SparseMatrix<double>::InnerIterator it(problem.interaction_matrix, j);
         it; ++it)
      matrix[it.row()][j] = Rational(static_cast<long>(it.value()));

  // Rank of the full matrix determines the basis size to enumerate.
  RationalMatrix rank_copy = matrix;
  const int rank = static_cast<int>(rref(rank_copy).size());

  RationalLpSolution best;
  best.feasible = false;

  std::vector<int> subset(rank);
  auto try_subset = [&](const std::vector<int>& cols_chosen) {
    // Solve matrix[:, chosen] w = m exactly via elimination on the augmented
    // system, then verify consistency.
    const int k = static_cast<int>(cols_chosen.size());
    RationalMatrix aug(rows, std::vector<Rational>(k + 1, Rational(0)));
    for (int r = 0; r < rows; ++r) {
      for (int j = 0; j < k; ++j) aug[r][j] = matrix[r][cols_chosen[j]];
      aug[r][k] = marginals[r];
    }
    const std::vector<int> pivots = rref(aug);
    // Inconsistent if any pivot landed on the RHS column.
    for (int p : pivots)
      if (p == k) return;
    std::vector<Rational> w(k, Rational(0));
    for (std::size_t i = 0; i < pivots.size(); ++i) w[pivots[i]] = aug[i][k];
    // Rows below the pivot rows must be all zero (checked by rref structure);
    // verify the solution satisfies every original row.
    for (int r = 0; r < rows; ++r) {
      Rational lhs(0);
      for (int j = 0; j < k; ++j) lhs += matrix[r][cols_chosen[j]] * w[j];
      if (lhs != marginals[r]) return;
    }
    for (const Rational& v : w)
      if (v < 0) return;
    Rational objective(0);
    for (const Rational& v : w) objective += v;
    if (!best.feasible || objective < best.objective) {
      best.feasible = true;
      best.objective = objective;
      best.weights.assign(cols, Rational(0));
      for (int j = 0; j < k; ++j) best.weights[cols_chosen[j]] = w[j];
    }
  };

  // Enumerate all column subsets of size `rank`; every vertex of the feasible
  // polyhedron is the basic solution of one of them.
  auto recurse = [&](auto&& self, int start, int depth) -> void {
    if (depth == rank) {
      try_subset(subset);
      return;
    }
    for (int c = start; c <= cols - (rank - depth); ++c) {
      subset[depth] = c;
      self(self, c + 1, depth + 1);
    }
  };
  if (rank == 0) {
    // Zero matrix: feasible iff m == 0.
    bool all_zero = true;
    for (const auto& v : marginals) all_zero &= (v == 0);
    if (all_zero) {
      best.feasible = true;
      best.objective = 0;
      best.weights.assign(cols, Rational(0));
    }
    return best;
  }
  recurse(recurse, 0, 0);
  return best;
}

std::vector<Rational> uniform_masses(int n) {
  if (n <= 0) throw std::invalid_argument("uniform_masses: n must be positive");
  return std::vector<Rational>(n, Rational(1, n));
}

}  // namespace advot::oracle
