// Command-line front end: build interaction complexes, run LP / Sinkhorn
// solves and sweeps, report truncation bounds, and generate synthetic
// datasets.
//
// Exit codes: 0 ok, 2 input error, 3 solver failure, 4 guard/timeout.

#include "advot/data_io.hpp"
#include "advot/interactions.hpp"
#include "advot/run.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitSolver = 3;
constexpr int kExitGuard = 4;

struct DatasetFlags {
  std::string data_path;
  std::string labels_path;  // idx label file
  std::string format = "csv";
  std::string synthetic;
  std::string label_column = "label";
  bool no_header = false;
  int per_class = 0;
  int samples_per_class = 30;
  double cov_scale = 1.0;
  std::uint64_t seed = 0;
  std::vector<int> classes_filter;
  std::string normalize = "none";
};

void add_dataset_flags(CLI::App* cmd, DatasetFlags& flags) {
  cmd->add_option("--data", flags.data_path, "dataset path (csv, or idx image file)");
  cmd->add_option("--labels", flags.labels_path, "idx label file path");
  cmd->add_option("--format", flags.format, "dataset format: csv|idx")
      ->check(CLI::IsMember({"csv", "idx"}));
  cmd->add_option("--synthetic", flags.synthetic,
                  "built-in dataset: triangle|gaussian6")
      ->check(CLI::IsMember({"triangle", "gaussian6"}));
  cmd->add_option("--label-column", flags.label_column,
                  "csv label column name or index");
  cmd->add_flag("--no-header", flags.no_header, "csv file has no header row");
  cmd->add_option("--per-class", flags.per_class,
                  "keep at most this many points per class (0 = all)");
  cmd->add_option("--samples-per-class", flags.samples_per_class,
                  "gaussian6: samples per class");
  cmd->add_option("--cov-scale", flags.cov_scale,
                  "gaussian6: covariance is cov-scale times identity");
  cmd->add_option("--seed", flags.seed, "seed for sampling and generators");
  cmd->add_option("--classes", flags.classes_filter,
                  "restrict to these class indices")
      ->delimiter(',');
  cmd->add_option("--normalize", flags.normalize,
                  "feature scaling: none|unit")
      ->check(CLI::IsMember({"none", "unit"}));
}

advot::LabeledPointCloud load_dataset(const DatasetFlags& flags) {
  advot::DatasetSpec spec;
  if (!flags.synthetic.empty()) {
    spec.source = flags.synthetic == "triangle"
                      ? advot::DatasetSpec::Source::TrianglePair
                      : advot::DatasetSpec::Source::SyntheticGaussian;
    spec.samples_per_class = flags.samples_per_class;
    spec.cov_scale = flags.cov_scale;
  } else if (!flags.data_path.empty()) {
    if (flags.format == "idx") {
      if (flags.labels_path.empty())
        throw std::invalid_argument("idx format requires --labels");
      spec.source = advot::DatasetSpec::Source::IdxPair;
      spec.images_path = flags.data_path;
      spec.labels_path = flags.labels_path;
    } else {
      spec.source = advot::DatasetSpec::Source::CsvPath;
      spec.csv_path = flags.data_path;
      spec.label_column = flags.label_column;
      spec.has_header = !flags.no_header;
    }
  } else {
    throw std::invalid_argument("specify --data or --synthetic");
  }
  if (!flags.classes_filter.empty()) spec.classes_filter = flags.classes_filter;
  spec.per_class_count = flags.per_class;
  spec.seed = flags.seed;
  spec.normalize = flags.normalize == "unit" ? advot::Normalize::UnitScale
                                             : advot::Normalize::None;
  return advot::load_dataset(spec);
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file " + path);
  out << content;
}

int status_to_exit(const std::string& status) {
  if (status == "optimal") return kExitOk;
  if (status == "budget_exceeded") return kExitGuard;
  return kExitSolver;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lower bounds on multiclass adversarial risk via truncated "
               "multimarginal optimal transport"};
  app.require_subcommand(1);

  DatasetFlags data;
  std::string metric_name = "l2";
  std::string out_path;
  advot::SolveSettings settings;
  double eps = 0.1;
  int level = 2;
  bool omit_timing = false;

  auto add_common = [&](CLI::App* cmd) {
    add_dataset_flags(cmd, data);
    cmd->add_option("--metric", metric_name, "ground metric: l2|linf")
        ->check(CLI::IsMember({"l2", "linf"}));
    cmd->add_option("--out", out_path, "output path ('-' = stdout)");
    cmd->add_option("--threads", settings.threads, "worker threads");
    cmd->add_option("--max-seconds", settings.max_seconds,
                    "wall-clock limit per solve");
    cmd->add_option("--max-interactions", settings.max_interactions,
                    "interaction budget guard");
    cmd->add_flag("--omit-timing", omit_timing,
                  "zero runtime fields for byte-reproducible output");
  };

  auto* cmd_complex = app.add_subcommand("complex", "enumerate feasible interactions");
  add_common(cmd_complex);
  cmd_complex->add_option("--eps", eps, "adversarial budget")->required();
  cmd_complex->add_option("--level", level, "truncation level");

  auto* cmd_solve = app.add_subcommand("solve", "one LP or Sinkhorn solve");
  add_common(cmd_solve);
  cmd_solve->add_option("--eps", eps, "adversarial budget")->required();
  cmd_solve->add_option("--level", level, "truncation level");
  std::string solver = "lp";
  cmd_solve->add_option("--solver", solver, "lp|sinkhorn")
      ->check(CLI::IsMember({"lp", "sinkhorn"}));
  cmd_solve->add_option("--delta", settings.delta,
                        "sinkhorn approximation target (sets the schedule)");
  double eta_flag = 0, delta_prime_flag = 0;
  auto* eta_opt = cmd_solve->add_option("--eta", eta_flag, "override regularization strength");
  auto* dp_opt = cmd_solve->add_option("--delta-prime", delta_prime_flag,
                                       "override stopping tolerance");
  bool no_rounding = false;
  cmd_solve->add_flag("--no-rounding", no_rounding,
                      "sinkhorn: skip the feasibility-restoring rounding step");

  auto* cmd_sweep = app.add_subcommand("sweep", "grid of solves, CSV output");
  add_common(cmd_sweep);
  std::string grid_spec = "0.1:1.0:10";
  std::vector<int> levels{2};
  std::string sweep_solver = "lp";
  int parallel_cells = 1;
  cmd_sweep->add_option("--eps-grid", grid_spec, "start:stop:steps");
  cmd_sweep->add_option("--levels", levels, "truncation levels")->delimiter(',');
  cmd_sweep->add_option("--solver", sweep_solver, "lp|sinkhorn|both")
      ->check(CLI::IsMember({"lp", "sinkhorn", "both"}));
  cmd_sweep->add_option("--delta", settings.delta, "sinkhorn approximation target");
  auto* sweep_eta = cmd_sweep->add_option("--eta", eta_flag, "override regularization strength");
  auto* sweep_dp = cmd_sweep->add_option("--delta-prime", delta_prime_flag,
                                         "override stopping tolerance");
  cmd_sweep->add_option("--parallel-cells", parallel_cells,
                        "run this many sweep cells concurrently");

  auto* cmd_bound = app.add_subcommand("bound", "truncation-error report");
  add_common(cmd_bound);
  cmd_bound->add_option("--eps", eps, "adversarial budget")->required();
  cmd_bound->add_option("--level", level, "truncation level");

  auto* cmd_synth = app.add_subcommand("synth", "write a synthetic dataset as CSV");
  add_dataset_flags(cmd_synth, data);
  cmd_synth->add_option("--out", out_path, "output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    const advot::Metric metric = advot::metric_from_string(metric_name);
    settings.record_runtime = !omit_timing;

    if (cmd_synth->parsed()) {
      advot::write_csv(load_dataset(data), out_path);
      return kExitOk;
    }

    const advot::LabeledPointCloud cloud = load_dataset(data);

    if (cmd_complex->parsed()) {
      advot::ComplexOptions copts;
      copts.threads = settings.threads;
      copts.max_interactions = settings.max_interactions;
      advot::InteractionComplex complex;
      try {
        complex = advot::build_complex(cloud, eps, metric, level, copts);
      } catch (const advot::BudgetExceededError& e) {
        std::cerr << e.what() << "\n";
        return kExitGuard;
      }
      nlohmann::json doc = advot::complex_to_json(complex);
      auto& counts = doc["counts_by_order"] = nlohmann::json::object();
      for (const auto& [order, count] : advot::count_by_order(complex))
        counts[std::to_string(order)] = count;
      write_output(out_path, doc.dump(2) + "\n");
      return kExitOk;
    }

    if (cmd_solve->parsed()) {
      if (*eta_opt) settings.eta = eta_flag;
      if (*dp_opt) settings.delta_prime = delta_prime_flag;
      settings.apply_rounding = !no_rounding;
      const advot::RunRecord record =
          advot::run_single(cloud, eps, metric, level, solver, settings);
      write_output(out_path, advot::run_record_to_json(record).dump(2) + "\n");
      return status_to_exit(record.status);
    }

    if (cmd_sweep->parsed()) {
      if (*sweep_eta) settings.eta = eta_flag;
      if (*sweep_dp) settings.delta_prime = delta_prime_flag;
      double start = 0, stop = 0;
      int steps = 0;
      if (std::sscanf(grid_spec.c_str(), "%lf:%lf:%d", &start, &stop, &steps) != 3)
        throw std::invalid_argument("--eps-grid expects start:stop:steps");
      std::vector<std::string> solvers;
      if (sweep_solver == "both")
        solvers = {"lp", "sinkhorn"};
      else
        solvers = {sweep_solver};
      const auto records =
          advot::run_sweep(cloud, advot::epsilon_grid(start, stop, steps), levels,
                           solvers, metric, settings, parallel_cells);
      write_output(out_path, advot::sweep_to_csv(records));
      return kExitOk;
    }

    if (cmd_bound->parsed()) {
      const advot::BoundReport report =
          advot::run_bound(cloud, eps, metric, level, settings);
      write_output(out_path, advot::bound_report_to_json(report).dump(2) + "\n");
      return report.status == "ok" ? kExitOk : kExitGuard;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitOk;
}
