// Independent brute-force references used by tests and the acceptance suite:
// exhaustive interaction enumeration and an exact-rational LP solve for tiny
// instances. Kept deliberately separate from the production code paths they
// check.

#pragma once

#include "advot/interactions.hpp"
#include "advot/lp.hpp"
#include "advot/point_cloud.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <vector>

namespace advot::oracle {

using Rational = boost::multiprecision::cpp_rational;

/// All valid interactions of size <= level by direct enumeration of every
/// cross-class tuple. Throws when more than `tuple_guard` tuples would be
/// inspected.
InteractionComplex brute_force_interactions(const LabeledPointCloud& cloud,
                                            double eps, Metric metric, int level,
                                            std::size_t tuple_guard = 1'000'000);

struct RationalLpSolution {
  std::vector<Rational> weights;
  Rational objective;
  bool feasible = false;
};

/// Global optimum of min sum(w) s.t. I w = m, w >= 0 by enumerating all basic
/// solutions in exact rational arithmetic. Guarded to at most 12 columns.
RationalLpSolution exact_lp(const LpProblem& problem,
                            const std::vector<Rational>& marginals);

/// Exact uniform masses 1/n.
std::vector<Rational> uniform_masses(int n);

}  // namespace advot::oracle
