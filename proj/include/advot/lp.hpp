// Exact linear program over the interaction complex:
//
//   min sum(w)  s.t.  I w = m,  w >= 0
//
// where I is the 0/1 interaction matrix (rows: support points, columns:
// interactions) and m the marginal vector. One minus the optimum is the
// adversarial-risk lower bound. Also recovers the optimal generalized
// barycenter and attacked marginals from an optimal w.

#pragma once

#include "advot/interactions.hpp"
#include "advot/point_cloud.hpp"

#include <Eigen/SparseCore>
#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <map>
#include <memory>
#include <vector>

namespace advot {

struct LpProblem {
  Eigen::SparseMatrix<double> interaction_matrix;  // N x C, entries in {0,1}
  Eigen::VectorXd marginals;                       // m, per (class, point) row
  std::vector<int> column_order;                   // |A| per column
};

enum class LpStatus { Optimal, Infeasible, IterationLimit };

std::string to_string(LpStatus status);

struct LpSolverOptions {
  std::int64_t max_iterations = -1;  // <0: scaled default
  double time_limit_seconds = 0;     // 0: no limit
  double tolerance = 1e-9;
};

struct LpSolution {
  Eigen::VectorXd weights;
  double objective = 0.0;
  double risk_lower_bound = 0.0;
  LpStatus status = LpStatus::Infeasible;
  double residual_inf = 0.0;  // ||I w - m||_inf at the returned iterate
  std::int64_t iterations = 0;
  std::map<int, double> mass_by_order;  // orders with mass > 1e-12
};

/// Columns in the canonical flat order of the complex; rows in
/// (class, local point) order. Throws if the complex references points
/// outside the cloud.
LpProblem assemble_lp(const InteractionComplex& complex,
                      const LabeledPointCloud& cloud);

/// Hook for plugging an external LP solver behind the same contract.
class LpBackend {
 public:
  virtual ~LpBackend() = default;
  virtual LpSolution solve(const LpProblem& problem,
                           const LpSolverOptions& opts) const = 0;
};

/// Built-in revised simplex on the sparse column form (Dantzig pricing with a
/// Bland anti-cycling fallback; deterministic).
std::shared_ptr<const LpBackend> simplex_backend();

LpSolution solve_lp(const LpProblem& problem, const LpSolverOptions& opts = {},
                    const LpBackend* backend = nullptr);

struct AttackPlan {
  // Generalized barycenter: one atom per interaction with weight > 1e-12.
  std::vector<std::pair<Eigen::VectorXd, double>> barycenter;
  // Attacked marginal per class: atoms at witnesses of interactions
  // containing the class.
  std::vector<std::vector<std::pair<Eigen::VectorXd, double>>> attacked;
  std::map<int, double> mass_by_order;
};

AttackPlan recover_attack(const LpSolution& solution,
                          const InteractionComplex& complex,
                          const LabeledPointCloud& cloud);

nlohmann::json lp_solution_to_json(const LpSolution& solution);

}  // namespace advot
