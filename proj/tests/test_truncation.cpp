#include "advot/truncation.hpp"

#include <doctest.h>

#include "advot/data_io.hpp"
#include "advot/lp.hpp"
#include "test_util.hpp"

using namespace advot;

TEST_CASE("barycenter bound formula") {
  CHECK(barycenter_bound({{1, 0.5}, {3, 1.0 / 6.0}}, 2) ==
        doctest::Approx(1.0 / 12.0));
  CHECK(barycenter_bound({{1, 0.2}, {2, 0.3}, {5, 0.1}}, 5) == 0.0);
  CHECK(barycenter_bound({{2, 0.4}}, 2) == 0.0);
  CHECK_THROWS_AS(barycenter_bound({{2, 0.4}}, 0), std::invalid_argument);
}

TEST_CASE("mot bound formula") {
  CHECK(mot_bound({{3, 1.0 / 6.0}}, 2) == doctest::Approx(0.25));
  CHECK(mot_bound({{1, 1.0}}, 1) == 0.0);
  CHECK(mot_bound({{4, 0.1}, {5, 0.2}}, 3) ==
        doctest::Approx(4.0 / 3.0 * 0.1 + 5.0 / 3.0 * 0.2));
}

TEST_CASE("triangle truncation gap attains the bound") {
  const auto cloud = triangle_fixture();
  const auto full =
      solve_lp(assemble_lp(build_complex(cloud, 0.8, Metric::L2, 6), cloud));
  const auto truncated =
      solve_lp(assemble_lp(build_complex(cloud, 0.8, Metric::L2, 2), cloud));
  const auto bound = make_truncation_bound(full.objective, truncated.objective,
                                           full.mass_by_order, 2);
  CHECK(bound.bound == doctest::Approx(1.0 / 12.0).epsilon(1e-9));
  CHECK(truncated.objective - full.objective ==
        doctest::Approx(1.0 / 12.0).epsilon(1e-9));
  CHECK(bound.truncated_value <= bound.upper_bound_on_truncated + 1e-9);
}

TEST_CASE("truncated value never exceeds full value plus bound") {
  advot_test::Rng rng(111);
  for (int trial = 0; trial < 25; ++trial) {
    const int num_classes = 3 + rng.index(2);
    const auto cloud = advot_test::random_cloud(rng, num_classes, 3, 2, 1.5);
    const double eps = rng.uniform(0.2, 1.0);
    const auto full = solve_lp(
        assemble_lp(build_complex(cloud, eps, Metric::L2, num_classes), cloud));
    REQUIRE(full.status == LpStatus::Optimal);
    for (int level = 1; level < num_classes; ++level) {
      const auto truncated = solve_lp(
          assemble_lp(build_complex(cloud, eps, Metric::L2, level), cloud));
      REQUIRE(truncated.status == LpStatus::Optimal);
      const auto bound = make_truncation_bound(
          full.objective, truncated.objective, full.mass_by_order, level);
      CHECK(truncated.objective - full.objective <= bound.bound + 1e-9);
      CHECK(bound.bound >= -1e-15);
    }
  }
}
