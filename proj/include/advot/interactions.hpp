// Enumeration of feasible labeled interactions up to a truncation level.
//
// An interaction is a set of points with pairwise-distinct class labels that
// fit inside a common closed eps-ball. Interactions are grouped by their label
// set and built level by level: singletons, then cross-class pairs by direct
// distance checks, then joins of size-(k-1) interactions sharing a (k-2)
// subset. Downward closure of feasibility guarantees the join finds
// everything.

#pragma once

#include "advot/geometry.hpp"
#include "advot/point_cloud.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstddef>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

namespace advot {

struct Interaction {
  // (class, local point index) pairs with strictly increasing classes.
  std::vector<std::pair<int, int>> members;
  Eigen::VectorXd witness;

  int order() const { return static_cast<int>(members.size()); }
  std::vector<int> label_set() const;
};

struct InteractionGroup {
  std::vector<int> labels;                // sorted label set A
  std::vector<Interaction> interactions;  // F_A, sorted by member list
};

struct InteractionComplex {
  double eps = 0.0;
  Metric metric = Metric::L2;
  int level = 1;
  // Sorted by (|A|, A lexicographic); singleton groups come first, one per
  // class, so flat column j < N is the singleton of row j.
  std::vector<InteractionGroup> groups;

  std::size_t total_count() const;
  int max_order() const;
};

/// Per-order interaction counts; the counts partition total_count().
std::map<int, std::size_t> count_by_order(const InteractionComplex& complex);

struct BudgetExceededError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ComplexOptions {
  int threads = 1;
  std::size_t max_interactions = 5'000'000;
};

/// Algorithm: all valid interactions of size <= level over the cloud.
/// Throws BudgetExceededError when the count cap is hit.
InteractionComplex build_complex(const LabeledPointCloud& cloud, double eps,
                                 Metric metric, int level,
                                 const ComplexOptions& opts = {});

nlohmann::json complex_to_json(const InteractionComplex& complex);
InteractionComplex complex_from_json(const nlohmann::json& doc);

/// Canonical flat column order: groups in stored order, interactions within.
/// Returns (group index, interaction index) per flat column.
std::vector<std::pair<int, int>> flat_columns(const InteractionComplex& complex);

}  // namespace advot
