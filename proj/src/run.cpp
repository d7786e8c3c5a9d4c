#include "advot/run.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace advot {

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                   start)
      .count();
}

std::string format_double(double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

}  // namespace

RunRecord run_single(const LabeledPointCloud& cloud, double eps, Metric metric,
                     int level, const std::string& solver,
                     const SolveSettings& settings) {
  RunRecord record;
  record.epsilon = eps;
  record.level = level;
  record.metric = metric;
  record.solver = solver;

  InteractionComplex complex;
  try {
    ComplexOptions copts;
    copts.threads = settings.threads;
    copts.max_interactions = settings.max_interactions;
    complex = build_complex(cloud, eps, metric, level, copts);
  } catch (const BudgetExceededError&) {
    record.status = "budget_exceeded";
    return record;
  }
  record.interactions_by_order = count_by_order(complex);

  const auto start = std::chrono::steady_clock::now();
  try {
    if (solver == "lp") {
      const LpProblem problem = assemble_lp(complex, cloud);
      LpSolverOptions opts;
      opts.max_iterations = settings.lp_max_iterations;
      opts.time_limit_seconds = settings.max_seconds;
      const LpSolution solution = solve_lp(problem, opts);
      record.status = to_string(solution.status);
      record.objective_value = solution.objective;
      record.risk_lower_bound = solution.risk_lower_bound;
      record.mass_by_order = solution.mass_by_order;
      record.iterations = solution.iterations;
    } else if (solver == "sinkhorn") {
      EntropicOptions opts;
      opts.eta_override = settings.eta;
      opts.delta_prime_override = settings.delta_prime;
      opts.sinkhorn.threads = settings.threads;
      opts.sinkhorn.max_iterations = settings.sinkhorn_max_iterations;
      opts.sinkhorn.time_limit_seconds = settings.max_seconds;
      opts.apply_rounding = settings.apply_rounding;
      const auto [family, report] =
          entropic_solve(cloud, complex, CostModel{}, settings.delta, opts);
      record.status = report.converged ? "optimal" : "iteration_limit";
      record.objective_value = report.value;
      record.risk_lower_bound = report.risk_lower_bound;
      record.iterations = report.iterations;
      record.eta = report.eta;
      record.delta_prime = report.delta_prime;
      int col = 0;
      for (const auto& group : complex.groups)
        for (std::size_t i = 0; i < group.interactions.size(); ++i, ++col) {
          const double mass = std::exp(family.log_mass[col]);
          if (mass > 1e-12)
            record.mass_by_order[static_cast<int>(group.labels.size())] += mass;
        }
    } else {
      throw std::invalid_argument("unknown solver '" + solver + "'");
    }
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception&) {
    record.status = "error";
  }
  record.runtime_ms = settings.record_runtime ? elapsed_ms(start) : 0.0;
  return record;
}

std::vector<double> epsilon_grid(double start, double stop, int steps) {
  if (steps < 1) throw std::invalid_argument("epsilon_grid: steps must be >= 1");
  std::vector<double> grid(steps);
  if (steps == 1) {
    grid[0] = start;
    return grid;
  }
  for (int i = 0; i < steps; ++i)
    grid[i] = start + (stop - start) * static_cast<double>(i) / (steps - 1);
  return grid;
}

std::vector<RunRecord> run_sweep(const LabeledPointCloud& cloud,
                                 const std::vector<double>& eps_grid,
                                 const std::vector<int>& levels,
                                 const std::vector<std::string>& solvers,
                                 Metric metric, const SolveSettings& settings,
                                 int parallel_cells) {
  struct Cell {
    double eps;
    int level;
    std::string solver;
  };
  std::vector<Cell> cells;
  for (double eps : eps_grid)
    for (int level : levels)
      for (const auto& solver : solvers) cells.push_back({eps, level, solver});

  std::vector<RunRecord> records(cells.size());
  auto run_cell = [&](std::size_t i) {
    try {
      records[i] =
          run_single(cloud, cells[i].eps, metric, cells[i].level, cells[i].solver, settings);
    } catch (const std::exception&) {
      records[i].epsilon = cells[i].eps;
      records[i].level = cells[i].level;
      records[i].metric = metric;
      records[i].solver = cells[i].solver;
      records[i].status = "error";
    }
  };
  if (parallel_cells <= 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
  } else {
    std::vector<std::thread> pool;
    const std::size_t workers =
        std::min<std::size_t>(parallel_cells, cells.size());
    const std::size_t chunk = (cells.size() + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(cells.size(), begin + chunk);
      if (begin >= end) break;
      pool.emplace_back([&, begin, end] {
        for (std::size_t i = begin; i < end; ++i) run_cell(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  return records;
}

BoundReport run_bound(const LabeledPointCloud& cloud, double eps, Metric metric,
                      int level, const SolveSettings& settings) {
  BoundReport report;
  RunRecord full =
      run_single(cloud, eps, metric, cloud.num_classes, "lp", settings);
  if (full.status != "optimal") {
    report.status = "unavailable";
    return report;
  }
  RunRecord truncated = run_single(cloud, eps, metric, level, "lp", settings);
  if (truncated.status != "optimal") {
    report.status = "unavailable";
    return report;
  }
  report.status = "ok";
  report.bound = make_truncation_bound(full.objective_value,
                                       truncated.objective_value,
                                       full.mass_by_order, level);
  report.truncated_risk = truncated.risk_lower_bound;
  report.full_risk = full.risk_lower_bound;
  report.gap = truncated.objective_value - full.objective_value;
  return report;
}

nlohmann::json run_record_to_json(const RunRecord& record) {
  nlohmann::json doc;
  doc["epsilon"] = record.epsilon;
  doc["level"] = record.level;
  doc["metric"] = to_string(record.metric);
  doc["solver"] = record.solver;
  doc["status"] = record.status;
  doc["objective_value"] = record.objective_value;
  doc["risk_lower_bound"] = record.risk_lower_bound;
  auto& mass = doc["mass_by_order"] = nlohmann::json::object();
  for (const auto& [order, value] : record.mass_by_order)
    mass[std::to_string(order)] = value;
  auto& counts = doc["interactions_by_order"] = nlohmann::json::object();
  for (const auto& [order, count] : record.interactions_by_order)
    counts[std::to_string(order)] = count;
  doc["iterations"] = record.iterations;
  doc["runtime_ms"] = record.runtime_ms;
  doc["eta"] = record.eta;
  doc["delta_prime"] = record.delta_prime;
  return doc;
}

nlohmann::json bound_report_to_json(const BoundReport& report) {
  nlohmann::json doc;
  doc["status"] = report.status;
  if (report.status == "ok") {
    doc["level"] = report.bound.level;
    doc["full_value"] = report.bound.full_value;
    doc["truncated_value"] = report.bound.truncated_value;
    doc["bound"] = report.bound.bound;
    doc["upper_bound_on_truncated"] = report.bound.upper_bound_on_truncated;
    doc["gap"] = report.gap;
    doc["full_risk"] = report.full_risk;
    doc["truncated_risk"] = report.truncated_risk;
    doc["inequality_holds"] =
        report.bound.truncated_value <=
        report.bound.upper_bound_on_truncated + 1e-9;
  }
  return doc;
}

std::string sweep_to_csv(const std::vector<RunRecord>& records) {
  std::ostringstream out;
  out << "epsilon,level,metric,solver,status,objective_value,risk_lower_bound,"
         "iterations,runtime_ms,eta,delta_prime,mass_by_order,interactions_by_order\n";
  for (const auto& record : records) {
    out << format_double(record.epsilon) << ',' << record.level << ','
        << to_string(record.metric) << ',' << record.solver << ','
        << record.status << ',' << format_double(record.objective_value) << ','
        << format_double(record.risk_lower_bound) << ',' << record.iterations
        << ',' << format_double(record.runtime_ms) << ','
        << format_double(record.eta) << ',' << format_double(record.delta_prime)
        << ',';
    // Nested maps use ; and : separators to keep the CSV flat.
    bool first = true;
    for (const auto& [order, value] : record.mass_by_order) {
      if (!first) out << ';';
      out << order << ':' << format_double(value);
      first = false;
    }
    out << ',';
    first = true;
    for (const auto& [order, count] : record.interactions_by_order) {
      if (!first) out << ';';
      out << order << ':' << count;
      first = false;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace advot
