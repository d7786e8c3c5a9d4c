#include "advot/lp.hpp"

#include <Eigen/SparseLU>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace advot {

std::string to_string(LpStatus status) {
  switch (status) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::IterationLimit: return "iteration_limit";
  }
  return "unknown";
}

LpProblem assemble_lp(const InteractionComplex& complex,
                      const LabeledPointCloud& cloud) {
  const int rows = cloud.size();
  LpProblem problem;
  problem.marginals.resize(rows);
  for (int cls = 0; cls < cloud.num_classes; ++cls)
    for (int local = 0; local < cloud.class_size(cls); ++local)
      problem.marginals[cloud.row_index(cls, local)] =
          cloud.masses[cloud.global_index(cls, local)];

  std::vector<Eigen::Triplet<double>> entries;
  int col = 0;
  for (const auto& group : complex.groups) {
    for (const auto& inter : group.interactions) {
      for (const auto& [cls, local] : inter.members) {
        if (cls < 0 || cls >= cloud.num_classes || local < 0 ||
            local >= cloud.class_size(cls))
          throw std::invalid_argument(
              "assemble_lp: interaction references a point outside the cloud");
        entries.emplace_back(cloud.row_index(cls, local), col, 1.0);
      }
      problem.column_order.push_back(inter.order());
      ++col;
    }
  }
  problem.interaction_matrix.resize(rows, col);
  problem.interaction_matrix.setFromTriplets(entries.begin(), entries.end());
  problem.interaction_matrix.makeCompressed();
  return problem;
}

namespace {

// Revised simplex in standard form: min c.x s.t. A x = b, x >= 0.
// The basis is refactorized with a sparse LU every iteration; columns here
// carry at most `level` nonzeros, so factorizations stay cheap.
class RevisedSimplex {
 public:
  RevisedSimplex(const Eigen::SparseMatrix<double>& matrix,
                 const Eigen::VectorXd& rhs, const LpSolverOptions& opts)
      : matrix_(matrix), rhs_(rhs), opts_(opts),
        rows_(static_cast<int>(matrix.rows())),
        cols_(static_cast<int>(matrix.cols())) {}

  LpSolution run() {
    LpSolution solution;
    deadline_set_ = opts_.time_limit_seconds > 0;
    deadline_ = std::chrono::steady_clock::now() +
                std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                    std::chrono::duration<double>(opts_.time_limit_seconds));
    max_iterations_ = opts_.max_iterations >= 0
                          ? opts_.max_iterations
                          : std::max<std::int64_t>(10'000, 200LL * rows_);

    basis_.clear();
    if (!identity_start()) {
      switch (phase_one()) {
        case PhaseOneResult::Feasible:
          break;
        case PhaseOneResult::Infeasible:
          solution.status = LpStatus::Infeasible;
          finalize(solution);
          return solution;
        case PhaseOneResult::Limit:
          solution.status = LpStatus::IterationLimit;
          finalize(solution);
          return solution;
      }
    }
    const bool finished = iterate(/*phase_one=*/false);
    solution.status = finished ? LpStatus::Optimal : LpStatus::IterationLimit;
    finalize(solution);
    return solution;
  }

 private:
  static constexpr double kRatioTol = 1e-11;

  enum class PhaseOneResult { Feasible, Infeasible, Limit };

  // Singleton columns provide a ready-made identity basis when every row has
  // one; construction of the complex guarantees this.
  bool identity_start() {
    std::vector<int> row_to_col(rows_, -1);
    for (int j = 0; j < cols_; ++j) {
      const auto start = matrix_.outerIndexPtr()[j];
      const auto end = matrix_.outerIndexPtr()[j + 1];
      if (end - start == 1) {
        const int row = matrix_.innerIndexPtr()[start];
        if (row_to_col[row] < 0 && matrix_.valuePtr()[start] == 1.0)
          row_to_col[row] = j;
      }
    }
    for (int r = 0; r < rows_; ++r)
      if (row_to_col[r] < 0) return false;
    basis_ = std::move(row_to_col);
    num_artificials_ = 0;
    return true;
  }

  PhaseOneResult phase_one() {
    num_artificials_ = rows_;
    basis_.resize(rows_);
    artificial_sign_.assign(rows_, 1.0);
    for (int r = 0; r < rows_; ++r) {
      basis_[r] = cols_ + r;
      if (rhs_[r] < 0) artificial_sign_[r] = -1.0;
    }
    if (!iterate(/*phase_one=*/true)) return PhaseOneResult::Limit;
    // Feasible iff the artificial objective reached ~0.
    Eigen::VectorXd x = basic_solution();
    double infeasibility = 0.0;
    for (int r = 0; r < rows_; ++r)
      if (basis_[r] >= cols_) infeasibility += std::abs(x[r]);
    return infeasibility <= 1e-8 ? PhaseOneResult::Feasible
                                 : PhaseOneResult::Infeasible;
  }

  double cost(int col, bool phase_one) const {
    if (col >= cols_) return phase_one ? 1.0 : 0.0;
    return phase_one ? 0.0 : 1.0;
  }

  void append_column(std::vector<Eigen::Triplet<double>>& trip, int col,
                     int position) const {
    if (col >= cols_) {
      const int row = col - cols_;
      trip.emplace_back(row, position, artificial_sign_[row]);
      return;
    }
    for (Eigen::SparseMatrix<double>::InnerIterator it(matrix_, col); it; ++it)
      trip.emplace_back(it.row(), position, it.value());
  }

  void factorize() {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(rows_ * 4);
    for (int i = 0; i < rows_; ++i) append_column(trip, basis_[i], i);
    Eigen::SparseMatrix<double> b(rows_, rows_);
    b.setFromTriplets(trip.begin(), trip.end());
    b.makeCompressed();
    lu_.compute(b);
    if (lu_.info() != Eigen::Success)
      throw std::runtime_error("solve_lp: singular basis factorization");
  }

  Eigen::VectorXd basic_solution() { return lu_.solve(rhs_); }

  Eigen::VectorXd column_dense(int col) const {
    Eigen::VectorXd dense = Eigen::VectorXd::Zero(rows_);
    if (col >= cols_) {
      dense[col - cols_] = artificial_sign_[col - cols_];
      return dense;
    }
    for (Eigen::SparseMatrix<double>::InnerIterator it(matrix_, col); it; ++it)
      dense[it.row()] = it.value();
    return dense;
  }

  // Returns true on optimality, false on the iteration/time limit.
  bool iterate(bool phase_one) {
    std::vector<char> in_basis(cols_ + num_artificials_, 0);
    for (int col : basis_) in_basis[col] = 1;
    int degenerate_streak = 0;
    bool bland = false;

    while (true) {
      if (iterations_ >= max_iterations_) return false;
      if (deadline_set_ && std::chrono::steady_clock::now() > deadline_) return false;

      factorize();
      Eigen::VectorXd x = basic_solution();
      Eigen::VectorXd cb(rows_);
      for (int i = 0; i < rows_; ++i) cb[i] = cost(basis_[i], phase_one);
      Eigen::VectorXd y = lu_.transpose().solve(cb);

      // Pricing: Dantzig by default, Bland while escaping a degenerate streak.
      int entering = -1;
      double best = -opts_.tolerance;
      for (int j = 0; j < cols_; ++j) {
        if (in_basis[j]) continue;
        double reduced = cost(j, phase_one);
        for (Eigen::SparseMatrix<double>::InnerIterator it(matrix_, j); it; ++it)
          reduced -= y[it.row()] * it.value();
        if (reduced < best - 0.0) {
          if (bland) {
            entering = j;
            break;
          }
          best = reduced;
          entering = j;
        }
      }
      if (entering < 0) return true;  // no improving column: optimal

      Eigen::VectorXd direction = lu_.solve(column_dense(entering));
      int leaving = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (int i = 0; i < rows_; ++i) {
        if (direction[i] <= kRatioTol) continue;
        const double ratio = x[i] / direction[i];
        if (ratio < best_ratio - 1e-12) {
          best_ratio = ratio;
          leaving = i;
        } else if (ratio < best_ratio + 1e-12 && leaving >= 0 &&
                   basis_[i] < basis_[leaving]) {
          // Near-tie: take the smallest basis column, keep the tight ratio.
          best_ratio = std::min(best_ratio, ratio);
          leaving = i;
        }
      }
      if (leaving < 0)
        throw std::runtime_error("solve_lp: unbounded direction encountered");

      if (best_ratio <= kRatioTol) {
        if (++degenerate_streak > 100) bland = true;
      } else {
        degenerate_streak = 0;
        bland = false;
      }

      in_basis[basis_[leaving]] = 0;
      in_basis[entering] = 1;
      basis_[leaving] = entering;
      ++iterations_;
    }
  }

  void finalize(LpSolution& solution) {
    solution.iterations = iterations_;
    solution.weights = Eigen::VectorXd::Zero(cols_);
    if (!basis_.empty()) {
      factorize();
      Eigen::VectorXd x = basic_solution();
      for (int i = 0; i < rows_; ++i) {
        if (basis_[i] < cols_) solution.weights[basis_[i]] = std::max(0.0, x[i]);
      }
    }
    solution.objective = solution.weights.sum();
    solution.risk_lower_bound = 1.0 - solution.objective;
    solution.residual_inf =
        (matrix_ * solution.weights - rhs_).lpNorm<Eigen::Infinity>();
  }

  const Eigen::SparseMatrix<double>& matrix_;
  const Eigen::VectorXd& rhs_;
  const LpSolverOptions& opts_;
  const int rows_;
  const int cols_;
  int num_artificials_ = 0;
  std::vector<double> artificial_sign_;
  std::vector<int> basis_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
  std::int64_t iterations_ = 0;
  std::int64_t max_iterations_ = 0;
  bool deadline_set_ = false;
  std::chrono::steady_clock::time_point deadline_;
};

class SimplexBackend final : public LpBackend {
 public:
  LpSolution solve(const LpProblem& problem,
                   const LpSolverOptions& opts) const override {
    RevisedSimplex simplex(problem.interaction_matrix, problem.marginals, opts);
    LpSolution solution = simplex.run();
    if (solution.status == LpStatus::Optimal &&
        solution.residual_inf > 1e-8) {
      solution.status = LpStatus::IterationLimit;
    }
    for (int j = 0; j < solution.weights.size(); ++j) {
      const double w = solution.weights[j];
      if (w > 1e-12)
        solution.mass_by_order[problem.column_order[j]] += w;
    }
    return solution;
  }
};

}  // namespace

std::shared_ptr<const LpBackend> simplex_backend() {
  static const auto backend = std::make_shared<const SimplexBackend>();
  return backend;
}

LpSolution solve_lp(const LpProblem& problem, const LpSolverOptions& opts,
                    const LpBackend* backend) {
  if (problem.interaction_matrix.rows() != problem.marginals.size())
    throw std::invalid_argument("solve_lp: matrix/marginal size mismatch");
  if (backend) return backend->solve(problem, opts);
  return simplex_backend()->solve(problem, opts);
}

AttackPlan recover_attack(const LpSolution& solution,
                          const InteractionComplex& complex,
                          const LabeledPointCloud& cloud) {
  if (solution.status != LpStatus::Optimal)
    throw std::invalid_argument("recover_attack: solution is not optimal");
  if (static_cast<std::size_t>(solution.weights.size()) != complex.total_count())
    throw std::invalid_argument("recover_attack: solution/complex mismatch");

  AttackPlan plan;
  plan.attacked.resize(cloud.num_classes);
  int col = 0;
  for (const auto& group : complex.groups) {
    for (const auto& inter : group.interactions) {
      const double w = solution.weights[col++];
      if (w <= 1e-12) continue;
      plan.barycenter.emplace_back(inter.witness, w);
      plan.mass_by_order[inter.order()] += w;
      for (const auto& [cls, local] : inter.members)
        plan.attacked[cls].emplace_back(inter.witness, w);
    }
  }
  return plan;
}

nlohmann::json lp_solution_to_json(const LpSolution& solution) {
  nlohmann::json doc;
  doc["objective"] = solution.objective;
  doc["risk_lower_bound"] = solution.risk_lower_bound;
  doc["status"] = to_string(solution.status);
  auto& nnz = doc["nnz_weights"] = nlohmann::json::array();
  for (int j = 0; j < solution.weights.size(); ++j)
    if (solution.weights[j] > 1e-12)
      nnz.push_back({j, solution.weights[j]});
  auto& mass = doc["mass_by_order"] = nlohmann::json::object();
  for (const auto& [order, value] : solution.mass_by_order)
    mass[std::to_string(order)] = value;
  return doc;
}

}  // namespace advot
