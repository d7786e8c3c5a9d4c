// A-posteriori truncation-error bounds: how much the level-L optimum can
// exceed the untruncated one, computed from the mass that the full solution
// places on interactions above level L.

#pragma once

#include <map>

namespace advot {

/// sum over k > L of (k/L - 1) * mass_k  (barycenter form).
double barycenter_bound(const std::map<int, double>& mass_by_order, int level);

/// sum over k > L of (k/L) * mass_k  (coupling form).
double mot_bound(const std::map<int, double>& mass_by_order, int level);

struct TruncationBound {
  int level = 0;
  double full_value = 0.0;       // objective of the untruncated solve
  double truncated_value = 0.0;  // objective at the given level
  double bound = 0.0;            // barycenter-form right-hand side
  double upper_bound_on_truncated = 0.0;  // full_value + bound
};

TruncationBound make_truncation_bound(double full_value, double truncated_value,
                                      const std::map<int, double>& full_mass_by_order,
                                      int level);

}  // namespace advot
