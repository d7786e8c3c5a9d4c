#include "advot/truncation.hpp"

#include <stdexcept>

namespace advot {

namespace {

double weighted_tail(const std::map<int, double>& mass_by_order, int level,
                     bool subtract_one) {
  if (level < 1) throw std::invalid_argument("truncation bound: level must be >= 1");
  double bound = 0.0;
  for (const auto& [order, mass] : mass_by_order) {
    if (mass < 0) throw std::invalid_argument("truncation bound: negative mass");
    if (order <= level) continue;
    const double coefficient =
        static_cast<double>(order) / static_cast<double>(level) -
        (subtract_one ? 1.0 : 0.0);
    bound += coefficient * mass;
  }
  return bound;
}

}  // namespace

double barycenter_bound(const std::map<int, double>& mass_by_order, int level) {
  return weighted_tail(mass_by_order, level, /*subtract_one=*/true);
}

double mot_bound(const std::map<int, double>& mass_by_order, int level) {
  return weighted_tail(mass_by_order, level, /*subtract_one=*/false);
}

TruncationBound make_truncation_bound(double full_value, double truncated_value,
                                      const std::map<int, double>& full_mass_by_order,
                                      int level) {
  TruncationBound result;
  result.level = level;
  result.full_value = full_value;
  result.truncated_value = truncated_value;
  result.bound = barycenter_bound(full_mass_by_order, level);
  result.upper_bound_on_truncated = full_value + result.bound;
  return result;
}

}  // namespace advot
