#include "advot/sinkhorn.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <thread>

namespace advot {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogFloor = -745.0;  // below this exp() underflows anyway

double safe_log(double x) { return x > 0 ? std::max(std::log(x), kLogFloor) : kLogFloor; }

// Streaming log-sum-exp accumulator.
struct LogAcc {
  double max = kNegInf;
  double sum = 0.0;

  void add(double lv) {
    if (lv == kNegInf) return;
    if (lv <= max) {
      sum += std::exp(lv - max);
    } else {
      sum = sum * std::exp(max - lv) + 1.0;
      max = lv;
    }
  }
  double value() const { return sum > 0 ? max + std::log(sum) : kNegInf; }
};

double kahan_sum(const std::vector<double>& values) {
  double sum = 0.0, comp = 0.0;
  for (double v : values) {
    const double y = v - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum;
}

// Flattened view of the complex used by every solver routine here.
struct FlatIndex {
  int num_classes = 0;
  std::vector<int> class_sizes;
  std::vector<std::vector<std::pair<int, int>>> members;  // per column
  std::vector<double> coeff;                              // 1 + c per column
  std::vector<int> order;
  std::vector<std::vector<std::vector<int>>> point_columns;  // [class][local]
  std::vector<std::vector<int>> singleton_column;            // [class][local]

  std::size_t size() const { return members.size(); }
};

FlatIndex build_index(const InteractionComplex& complex, const CostModel& cost,
                      const std::vector<Eigen::VectorXd>& mu) {
  FlatIndex index;
  index.num_classes = static_cast<int>(mu.size());
  index.class_sizes.resize(index.num_classes);
  for (int i = 0; i < index.num_classes; ++i)
    index.class_sizes[i] = static_cast<int>(mu[i].size());

  if (cost.values.size() &&
      static_cast<std::size_t>(cost.values.size()) != complex.total_count())
    throw std::invalid_argument("cost model size does not match the complex");

  index.point_columns.resize(index.num_classes);
  index.singleton_column.resize(index.num_classes);
  for (int i = 0; i < index.num_classes; ++i) {
    index.point_columns[i].resize(index.class_sizes[i]);
    index.singleton_column[i].assign(index.class_sizes[i], -1);
  }

  int col = 0;
  for (const auto& group : complex.groups) {
    for (const auto& inter : group.interactions) {
      for (const auto& [cls, local] : inter.members) {
        if (cls < 0 || cls >= index.num_classes || local < 0 ||
            local >= index.class_sizes[cls])
          throw std::invalid_argument(
              "complex references a point outside the marginals");
        index.point_columns[cls][local].push_back(col);
      }
      if (inter.order() == 1) {
        const auto [cls, local] = inter.members[0];
        index.singleton_column[cls][local] = col;
        if (cost.at(col) != 0.0)
          throw std::invalid_argument("singleton costs must be zero");
      }
      index.members.push_back(inter.members);
      index.coeff.push_back(1.0 + cost.at(col));
      index.order.push_back(inter.order());
      ++col;
    }
  }
  for (int i = 0; i < index.num_classes; ++i)
    for (int x = 0; x < index.class_sizes[i]; ++x)
      if (index.singleton_column[i][x] < 0)
        throw std::invalid_argument(
            "complex is missing singleton interactions; marginals cannot be matched");
  return index;
}

void parallel_for(int threads, std::size_t n,
                  const std::function<void(std::size_t)>& body) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(threads, n);
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      for (std::size_t i = begin; i < end; ++i) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

// log pi per column from potentials: (sum_i g_i(x_i) - coeff) / eta.
std::vector<double> log_masses_from_potentials(const FlatIndex& index,
                                               const DualPotentials& potentials) {
  std::vector<double> log_mass(index.size());
  for (std::size_t j = 0; j < index.size(); ++j) {
    double g_sum = 0.0;
    for (const auto& [cls, local] : index.members[j])
      g_sum += potentials.g[cls][local];
    log_mass[j] = (g_sum - index.coeff[j]) / potentials.eta;
  }
  return log_mass;
}

// Per-point projections in the log domain. Each point's accumulation is
// sequential over its own column list, so results are identical for any
// thread count.
std::vector<Eigen::VectorXd> log_marginals_from_masses(
    const FlatIndex& index, const std::vector<double>& log_mass, int threads) {
  std::vector<Eigen::VectorXd> log_marginals(index.num_classes);
  for (int i = 0; i < index.num_classes; ++i)
    log_marginals[i].resize(index.class_sizes[i]);

  std::vector<std::pair<int, int>> tasks;
  for (int i = 0; i < index.num_classes; ++i)
    for (int x = 0; x < index.class_sizes[i]; ++x) tasks.emplace_back(i, x);

  parallel_for(threads, tasks.size(), [&](std::size_t t) {
    const auto [i, x] = tasks[t];
    LogAcc acc;
    for (int col : index.point_columns[i][x]) acc.add(log_mass[col]);
    log_marginals[i][x] = acc.value();
  });
  return log_marginals;
}

std::vector<Eigen::VectorXd> exp_marginals(
    const std::vector<Eigen::VectorXd>& log_marginals) {
  std::vector<Eigen::VectorXd> out(log_marginals.size());
  for (std::size_t i = 0; i < log_marginals.size(); ++i)
    out[i] = log_marginals[i].array().exp();
  return out;
}

double family_value(const FlatIndex& index, const std::vector<double>& log_mass) {
  std::vector<double> terms(index.size());
  for (std::size_t j = 0; j < index.size(); ++j)
    terms[j] = index.coeff[j] * std::exp(log_mass[j]);
  return kahan_sum(terms);
}

double family_total(const FlatIndex& index, const std::vector<double>& log_mass) {
  std::vector<double> terms(index.size());
  for (std::size_t j = 0; j < index.size(); ++j) terms[j] = std::exp(log_mass[j]);
  return kahan_sum(terms);
}

CouplingFamily make_family(const FlatIndex& index, std::vector<double> log_mass,
                           int threads) {
  CouplingFamily family;
  family.log_mass = std::move(log_mass);
  family.log_marginals = log_marginals_from_masses(index, family.log_mass, threads);
  family.marginals = exp_marginals(family.log_marginals);
  family.total_mass = family_total(index, family.log_mass);
  family.value = family_value(index, family.log_mass);
  return family;
}

double dual_value(const FlatIndex& index, const DualPotentials& potentials,
                  const std::vector<Eigen::VectorXd>& mu,
                  const std::vector<double>& log_mass) {
  std::vector<double> terms;
  terms.reserve(index.size() + mu.size());
  for (std::size_t j = 0; j < index.size(); ++j) terms.push_back(std::exp(log_mass[j]));
  for (std::size_t i = 0; i < mu.size(); ++i)
    terms.push_back(-potentials.g[i].dot(mu[i]) / potentials.eta);
  return kahan_sum(terms);
}

// Generalized KL from the log projection, avoiding a round trip through exp
// for the log ratio.
double kl_from_logs(const Eigen::VectorXd& mu, const Eigen::VectorXd& log_mu,
                    const Eigen::VectorXd& log_nu) {
  double kl = 0.0;
  for (Eigen::Index x = 0; x < mu.size(); ++x) {
    kl += std::exp(log_nu[x]) - mu[x];
    if (mu[x] > 0) kl += mu[x] * (log_mu[x] - log_nu[x]);
  }
  return kl;
}

std::vector<Eigen::VectorXd> log_of(const std::vector<Eigen::VectorXd>& mu) {
  std::vector<Eigen::VectorXd> out(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    out[i].resize(mu[i].size());
    for (Eigen::Index x = 0; x < mu[i].size(); ++x) out[i][x] = safe_log(mu[i][x]);
  }
  return out;
}

void validate_marginals(const std::vector<Eigen::VectorXd>& mu) {
  if (mu.empty()) throw std::invalid_argument("marginals are empty");
  for (const auto& m : mu) {
    if (m.size() == 0) throw std::invalid_argument("a class has no support");
    if ((m.array() <= 0).any())
      throw std::invalid_argument("marginals must be strictly positive");
  }
}

}  // namespace

double generalized_kl(const Eigen::Ref<const Eigen::VectorXd>& mu,
                      const Eigen::Ref<const Eigen::VectorXd>& nu) {
  if (mu.size() != nu.size())
    throw std::invalid_argument("generalized_kl: size mismatch");
  double kl = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    if (mu[i] < 0) throw std::invalid_argument("generalized_kl: negative mass");
    if (nu[i] <= 0 && mu[i] > 0)
      throw std::invalid_argument("generalized_kl: divergence is infinite");
    kl += nu[i] - mu[i];
    if (mu[i] > 0) kl += mu[i] * std::log(mu[i] / nu[i]);
  }
  return kl;
}

double dual_objective(const DualPotentials& potentials,
                      const InteractionComplex& complex, const CostModel& cost,
                      const std::vector<Eigen::VectorXd>& mu) {
  const FlatIndex index = build_index(complex, cost, mu);
  const auto log_mass = log_masses_from_potentials(index, potentials);
  return dual_value(index, potentials, mu, log_mass);
}

CouplingFamily couplings_from_potentials(const DualPotentials& potentials,
                                         const InteractionComplex& complex,
                                         const CostModel& cost) {
  // Support sizes come from the potentials themselves.
  std::vector<Eigen::VectorXd> mu(potentials.g.size());
  for (std::size_t i = 0; i < mu.size(); ++i)
    mu[i] = Eigen::VectorXd::Ones(potentials.g[i].size());
  const FlatIndex index = build_index(complex, cost, mu);
  return make_family(index, log_masses_from_potentials(index, potentials), 1);
}

std::vector<Eigen::VectorXd> compute_marginals(const CouplingFamily& family,
                                               const InteractionComplex& complex) {
  // Reconstruct support sizes from the complex's singleton groups.
  int num_classes = 0;
  for (const auto& group : complex.groups)
    if (group.labels.size() == 1)
      num_classes = std::max(num_classes, group.labels[0] + 1);
  std::vector<Eigen::VectorXd> mu(num_classes);
  for (const auto& group : complex.groups)
    if (group.labels.size() == 1)
      mu[group.labels[0]] = Eigen::VectorXd::Ones(group.interactions.size());
  const FlatIndex index = build_index(complex, CostModel{}, mu);
  return exp_marginals(log_marginals_from_masses(index, family.log_mass, 1));
}

IterationBound iteration_bound(const std::vector<Eigen::VectorXd>& mu,
                               const InteractionComplex& complex,
                               const CostModel& cost, double eta,
                               double delta_prime) {
  validate_marginals(mu);
  IterationBound result;
  DualPotentials zero;
  zero.eta = eta;
  zero.g.resize(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i)
    zero.g[i] = Eigen::VectorXd::Zero(mu[i].size());
  result.initial_dual = dual_objective(zero, complex, cost, mu);

  double min_mass = std::numeric_limits<double>::infinity();
  double min_atom = std::numeric_limits<double>::infinity();
  int max_support = 0;
  for (const auto& m : mu) {
    min_mass = std::min(min_mass, m.sum());
    min_atom = std::min(min_atom, m.minCoeff());
    max_support = std::max(max_support, static_cast<int>(m.size()));
  }
  const int num_classes = static_cast<int>(mu.size());
  // With n defined as the largest class size, C* = max_i n_i / n = 1.
  const double c_star = 1.0;
  const int level = std::max(1, complex.level);
  result.min_class_mass = min_mass;
  result.potential_range = level - eta * safe_log(min_atom) +
                           eta * level * std::log(num_classes * c_star * max_support);
  result.bound = 2.0 + std::ceil(result.initial_dual / min_mass) +
                 14.0 * num_classes * num_classes * result.potential_range /
                     (eta * delta_prime);
  return result;
}

std::pair<DualPotentials, SinkhornReport> greedy_sinkhorn(
    const std::vector<Eigen::VectorXd>& mu, const InteractionComplex& complex,
    const CostModel& cost, double eta, double delta_prime,
    const SinkhornOptions& opts) {
  if (!(eta > 0)) throw std::invalid_argument("greedy_sinkhorn: eta must be positive");
  if (!(delta_prime > 0) || delta_prime >= 0.5)
    throw std::invalid_argument("greedy_sinkhorn: delta_prime must lie in (0, 1/2)");
  validate_marginals(mu);

  const FlatIndex index = build_index(complex, cost, mu);
  const int num_classes = index.num_classes;
  const auto log_mu = log_of(mu);

  DualPotentials potentials;
  potentials.eta = eta;
  potentials.g.resize(num_classes);
  for (int i = 0; i < num_classes; ++i)
    potentials.g[i] = Eigen::VectorXd::Zero(index.class_sizes[i]);

  std::int64_t max_iterations = opts.max_iterations;
  if (max_iterations < 0) {
    const double bound =
        iteration_bound(mu, complex, cost, eta, delta_prime).bound;
    max_iterations = bound >= 9.0e17
                         ? std::numeric_limits<std::int64_t>::max()
                         : static_cast<std::int64_t>(10.0 * bound) + 10;
  }

  SinkhornReport report;
  report.eta = eta;
  report.delta_prime = delta_prime;

  const auto start = std::chrono::steady_clock::now();
  const auto out_of_time = [&] {
    if (opts.time_limit_seconds <= 0) return false;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
               .count() > opts.time_limit_seconds;
  };

  std::int64_t updates = 0;
  while (true) {
    const auto log_mass = log_masses_from_potentials(index, potentials);
    const auto log_marginals =
        log_marginals_from_masses(index, log_mass, opts.threads);
    const auto marginals = exp_marginals(log_marginals);

    double error = 0.0;
    for (int i = 0; i < num_classes; ++i)
      error += (mu[i] - marginals[i]).lpNorm<1>();
    report.final_error = error;

    if (error <= delta_prime) {
      report.converged = true;
      break;
    }
    if (updates >= max_iterations || out_of_time()) {
      report.converged = false;
      break;
    }

    // Greedy coordinate: largest generalized-KL violation, ties to the
    // smallest class index.
    int chosen = 0;
    double best_kl = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < num_classes; ++i) {
      const double kl = kl_from_logs(mu[i], log_mu[i], log_marginals[i]);
      if (kl > best_kl) {
        best_kl = kl;
        chosen = i;
      }
    }

    SinkhornIterate iterate;
    if (opts.record_trajectory) {
      iterate.chosen_class = chosen;
      iterate.kl_decrement = best_kl;
      iterate.marginal_error = error;
      iterate.dual_before = dual_value(index, potentials, mu, log_mass);
    }

    potentials.g[chosen] += eta * (log_mu[chosen] - log_marginals[chosen]);
    ++updates;

    if (opts.record_trajectory) {
      const auto after = log_masses_from_potentials(index, potentials);
      iterate.dual_after = dual_value(index, potentials, mu, after);
      report.trajectory.push_back(iterate);
    }
  }

  report.iterations = updates;
  const auto final_mass = log_masses_from_potentials(index, potentials);
  report.value = family_value(index, final_mass);
  report.risk_lower_bound = 1.0 - report.value;
  report.rounded = false;
  return {std::move(potentials), std::move(report)};
}

CouplingFamily round_couplings(const CouplingFamily& family,
                               const std::vector<Eigen::VectorXd>& mu,
                               const InteractionComplex& complex,
                               const CostModel& cost) {
  validate_marginals(mu);
  const FlatIndex index = build_index(complex, cost, mu);
  if (family.log_mass.size() != index.size())
    throw std::invalid_argument("round_couplings: family/complex size mismatch");
  const auto log_mu = log_of(mu);

  std::vector<double> log_mass = family.log_mass;
  for (int i = 0; i < index.num_classes; ++i) {
    // Projection of the current masses onto class i.
    Eigen::VectorXd log_proj(index.class_sizes[i]);
    for (int x = 0; x < index.class_sizes[i]; ++x) {
      LogAcc acc;
      for (int col : index.point_columns[i][x]) acc.add(log_mass[col]);
      log_proj[x] = acc.value();
    }
    // z_i = min(1, mu_i / proj); scale every column containing the point.
    for (int x = 0; x < index.class_sizes[i]; ++x) {
      const double log_z =
          log_proj[x] == kNegInf ? 0.0 : std::min(0.0, log_mu[i][x] - log_proj[x]);
      if (log_z == 0.0) continue;
      for (int col : index.point_columns[i][x]) log_mass[col] += log_z;
    }
  }

  // Absorb what is missing into the singletons.
  for (int i = 0; i < index.num_classes; ++i) {
    for (int x = 0; x < index.class_sizes[i]; ++x) {
      LogAcc acc;
      for (int col : index.point_columns[i][x]) acc.add(log_mass[col]);
      const double projected = acc.sum > 0 ? std::exp(acc.value()) : 0.0;
      const double err = std::max(0.0, mu[i][x] - projected);
      if (err <= 0) continue;
      const int col = index.singleton_column[i][x];
      log_mass[col] = safe_log(std::exp(log_mass[col]) + err);
    }
  }
  return make_family(index, std::move(log_mass), 1);
}

std::vector<Eigen::VectorXd> smooth_marginals(
    const std::vector<Eigen::VectorXd>& mu, double delta_prime) {
  const double num_classes = static_cast<double>(mu.size());
  std::vector<Eigen::VectorXd> smoothed(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double n_i = static_cast<double>(mu[i].size());
    const double keep = 1.0 - delta_prime / (4.0 * num_classes);
    const double add = delta_prime * mu[i].sum() / (4.0 * num_classes * n_i);
    smoothed[i] = keep * mu[i] + Eigen::VectorXd::Constant(mu[i].size(), add);
  }
  return smoothed;
}

std::pair<CouplingFamily, SinkhornReport> entropic_solve(
    const LabeledPointCloud& cloud, const InteractionComplex& complex,
    const CostModel& cost, double delta, const EntropicOptions& opts) {
  if (!(delta > 0)) throw std::invalid_argument("entropic_solve: delta must be positive");
  if (complex.total_count() == 0)
    throw std::invalid_argument("entropic_solve: empty complex");

  const auto mu = cloud.class_marginals();
  const int num_classes = static_cast<int>(mu.size());
  int max_support = 0;
  for (const auto& m : mu)
    max_support = std::max(max_support, static_cast<int>(m.size()));
  const int level = std::max(1, complex.level);

  // Schedule: eta = (delta/2) / (2 L log(C* K n)),
  //           delta' = (delta/2) / (2 L max|1 + c|).
  const double c_star = 1.0;  // n is the largest class size
  const double log_term =
      std::max(std::log(c_star * num_classes * max_support), std::log(2.0));
  double eta = opts.eta_override.value_or((delta / 2.0) / (2.0 * level * log_term));
  double delta_prime = opts.delta_prime_override.value_or(
      (delta / 2.0) / (2.0 * level * cost.max_coefficient()));
  // The schedule hands delta'/2 to the greedy loop; explicit overrides are
  // used verbatim.
  const double stop_tolerance =
      opts.delta_prime_override ? delta_prime : delta_prime / 2.0;

  const auto smoothed = smooth_marginals(mu, delta_prime);
  auto [potentials, report] =
      greedy_sinkhorn(smoothed, complex, cost, eta, stop_tolerance, opts.sinkhorn);

  CouplingFamily family = couplings_from_potentials(potentials, complex, cost);
  if (opts.apply_rounding) {
    family = round_couplings(family, smoothed, complex, cost);
    report.rounded = true;
  }
  report.value = family.value;
  report.risk_lower_bound = 1.0 - family.value;
  return {std::move(family), std::move(report)};
}

nlohmann::json sinkhorn_report_to_json(const SinkhornReport& report) {
  nlohmann::json doc;
  doc["iterations"] = report.iterations;
  doc["final_error"] = report.final_error;
  doc["eta"] = report.eta;
  doc["delta_prime"] = report.delta_prime;
  doc["risk_lower_bound"] = report.risk_lower_bound;
  doc["value"] = report.value;
  doc["rounded"] = report.rounded;
  return doc;
}

}  // namespace advot
