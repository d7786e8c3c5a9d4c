// Orchestration shared by the CLI and the acceptance suite: single solves,
// epsilon/level sweeps, and truncation-bound reports, each emitting
// machine-readable records.

#pragma once

#include "advot/interactions.hpp"
#include "advot/lp.hpp"
#include "advot/point_cloud.hpp"
#include "advot/sinkhorn.hpp"
#include "advot/truncation.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace advot {

struct SolveSettings {
  double delta = 0.1;                       // sinkhorn schedule target
  std::optional<double> eta;                // practice-mode overrides
  std::optional<double> delta_prime;
  int threads = 1;
  double max_seconds = 600;                 // wall-clock guard per solve
  std::size_t max_interactions = 5'000'000;
  std::int64_t lp_max_iterations = -1;
  std::int64_t sinkhorn_max_iterations = -1;
  bool apply_rounding = true;  // sinkhorn: report the rounded (feasible) value
  bool record_runtime = true;               // false zeroes runtime_ms for reproducible output
};

struct RunRecord {
  double epsilon = 0.0;
  int level = 0;
  Metric metric = Metric::L2;
  std::string solver;  // "lp" | "sinkhorn"
  std::string status;  // "optimal" | "iteration_limit" | "infeasible" | "budget_exceeded" | "error"
  double objective_value = 0.0;
  double risk_lower_bound = 0.0;
  std::map<int, double> mass_by_order;
  std::map<int, std::size_t> interactions_by_order;
  std::int64_t iterations = 0;
  double runtime_ms = 0.0;
  double eta = 0.0;          // sinkhorn only, 0 otherwise
  double delta_prime = 0.0;  // sinkhorn only, 0 otherwise
};

/// One solve; the complex is built internally (its cost is excluded from
/// runtime_ms). Guard trips surface through the status field.
RunRecord run_single(const LabeledPointCloud& cloud, double eps, Metric metric,
                     int level, const std::string& solver,
                     const SolveSettings& settings);

/// Uniformly spaced epsilon grid with both endpoints included.
std::vector<double> epsilon_grid(double start, double stop, int steps);

/// One record per (eps, level, solver); failures are recorded in the status
/// column and the sweep continues. parallel_cells > 1 runs cells concurrently.
std::vector<RunRecord> run_sweep(const LabeledPointCloud& cloud,
                                 const std::vector<double>& eps_grid,
                                 const std::vector<int>& levels,
                                 const std::vector<std::string>& solvers,
                                 Metric metric, const SolveSettings& settings,
                                 int parallel_cells = 1);

struct BoundReport {
  std::string status;  // "ok" | "unavailable"
  TruncationBound bound;
  double truncated_risk = 0.0;
  double full_risk = 0.0;
  double gap = 0.0;  // truncated_value - full_value
};

/// Truncation-error report: requires a tractable full (level = K) LP solve;
/// otherwise status is "unavailable".
BoundReport run_bound(const LabeledPointCloud& cloud, double eps, Metric metric,
                      int level, const SolveSettings& settings);

nlohmann::json run_record_to_json(const RunRecord& record);
nlohmann::json bound_report_to_json(const BoundReport& report);

/// Fixed-column CSV: one row per record, documented in the README.
std::string sweep_to_csv(const std::vector<RunRecord>& records);

}  // namespace advot
