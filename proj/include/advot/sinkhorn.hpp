// Truncated multimarginal Sinkhorn machinery.
//
// Solves the entropic relaxation of the truncated stratified MOT problem by
// greedy coordinate descent on the dual: at each step the class whose marginal
// constraint has the largest generalized-KL violation is updated so that its
// constraint holds exactly. A rounding pass restores feasibility of the final
// couplings, and the full wrapper adds marginal smoothing plus the parameter
// schedule that yields a delta-approximate optimum.
//
// All tuple masses are kept in the log domain; marginal projections use
// streaming log-sum-exp, so the schedule's tiny regularization strengths do
// not underflow.

#pragma once

#include "advot/interactions.hpp"
#include "advot/point_cloud.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace advot {

/// Cost per interaction (flat column order); empty means all zeros, which is
/// the adversarial instance. Singleton costs must be zero.
struct CostModel {
  Eigen::VectorXd values;

  double at(std::size_t column) const {
    return values.size() ? values[static_cast<Eigen::Index>(column)] : 0.0;
  }
  /// max over interactions of (1 + c).
  double max_coefficient() const {
    return values.size() ? 1.0 + values.maxCoeff() : 1.0;
  }
};

struct DualPotentials {
  std::vector<Eigen::VectorXd> g;  // per class, over that class's support
  double eta = 0.0;
};

struct CouplingFamily {
  std::vector<double> log_mass;               // per flat column
  std::vector<Eigen::VectorXd> marginals;     // cached P_i per class
  std::vector<Eigen::VectorXd> log_marginals;
  double total_mass = 0.0;
  double value = 0.0;  // sum of (1 + c_A) pi_A
};

double generalized_kl(const Eigen::Ref<const Eigen::VectorXd>& mu,
                      const Eigen::Ref<const Eigen::VectorXd>& nu);

double dual_objective(const DualPotentials& potentials,
                      const InteractionComplex& complex, const CostModel& cost,
                      const std::vector<Eigen::VectorXd>& mu);

CouplingFamily couplings_from_potentials(const DualPotentials& potentials,
                                         const InteractionComplex& complex,
                                         const CostModel& cost);

/// Recomputes the per-class projections from the raw masses (used by tests to
/// validate the caches and by the rounding pass).
std::vector<Eigen::VectorXd> compute_marginals(const CouplingFamily& family,
                                               const InteractionComplex& complex);

struct SinkhornIterate {
  int chosen_class = -1;
  double dual_before = 0.0;
  double dual_after = 0.0;
  double kl_decrement = 0.0;   // generalized KL of the chosen class at g^t
  double marginal_error = 0.0; // E_t before the update
};

struct SinkhornOptions {
  std::int64_t max_iterations = -1;  // <0: ten times the iteration bound
  double time_limit_seconds = 0;     // 0: no limit
  bool record_trajectory = false;
  int threads = 1;
};

struct SinkhornReport {
  std::int64_t iterations = 0;
  double final_error = 0.0;
  double eta = 0.0;
  double delta_prime = 0.0;  // stopping tolerance actually used
  double value = 0.0;
  double risk_lower_bound = 0.0;
  bool rounded = false;
  bool converged = false;
  std::vector<SinkhornIterate> trajectory;  // filled when record_trajectory
};

/// Iteration cap derived from the dual value at zero potentials, the smallest
/// class mass, and the potential-range constant.
struct IterationBound {
  double initial_dual = 0.0;
  double min_class_mass = 0.0;
  double potential_range = 0.0;  // R-bar
  double bound = 0.0;
};

IterationBound iteration_bound(const std::vector<Eigen::VectorXd>& mu,
                               const InteractionComplex& complex,
                               const CostModel& cost, double eta,
                               double delta_prime);

/// Greedy coordinate descent on the entropic dual until the summed l1
/// marginal violation drops below delta_prime.
std::pair<DualPotentials, SinkhornReport> greedy_sinkhorn(
    const std::vector<Eigen::VectorXd>& mu, const InteractionComplex& complex,
    const CostModel& cost, double eta, double delta_prime,
    const SinkhornOptions& opts = {});

/// Rescales couplings class by class and pads singletons so every marginal
/// constraint holds exactly; l1 perturbation is at most L times the input
/// marginal violation.
CouplingFamily round_couplings(const CouplingFamily& family,
                               const std::vector<Eigen::VectorXd>& mu,
                               const InteractionComplex& complex,
                               const CostModel& cost = {});

struct EntropicOptions {
  std::optional<double> eta_override;
  std::optional<double> delta_prime_override;
  bool apply_rounding = true;
  SinkhornOptions sinkhorn;
};

/// Smoothing + greedy Sinkhorn + rounding; with the default schedule the
/// value of the output is within delta of the truncated LP optimum.
std::pair<CouplingFamily, SinkhornReport> entropic_solve(
    const LabeledPointCloud& cloud, const InteractionComplex& complex,
    const CostModel& cost, double delta, const EntropicOptions& opts = {});

/// The smoothed marginals used by entropic_solve's first step.
std::vector<Eigen::VectorXd> smooth_marginals(
    const std::vector<Eigen::VectorXd>& mu, double delta_prime);

nlohmann::json sinkhorn_report_to_json(const SinkhornReport& report);

}  // namespace advot
