#include "advot/oracle.hpp"

#include <doctest.h>

#include "advot/data_io.hpp"
#include "test_util.hpp"

using namespace advot;
using oracle::Rational;

TEST_CASE("brute force enumeration on the triangle fixture") {
  const auto cloud = triangle_fixture();
  const auto complex = oracle::brute_force_interactions(cloud, 0.8, Metric::L2, 3);
  const auto counts = count_by_order(complex);
  CHECK(counts.at(1) == 6);
  CHECK(counts.at(2) == 3);
  CHECK(counts.at(3) == 1);

  SUBCASE("tiny eps keeps only singletons") {
    const auto sparse =
        oracle::brute_force_interactions(cloud, 1e-6, Metric::L2, 3);
    CHECK(sparse.total_count() == 6);
  }
  SUBCASE("level 1 is exactly the points") {
    const auto singles =
        oracle::brute_force_interactions(cloud, 2.0, Metric::L2, 1);
    CHECK(singles.total_count() == 6);
  }
  SUBCASE("tuple guard") {
    CHECK_THROWS_AS(
        oracle::brute_force_interactions(cloud, 0.8, Metric::L2, 3, 10),
        std::runtime_error);
  }
}

TEST_CASE("exact_lp on known instances") {
  SUBCASE("two-point merge is exactly 1/2") {
    PointMatrix pts(2, 2);
    pts << 0, 0, 1, 0;
    const auto cloud = LabeledPointCloud::create_uniform(pts, {0, 1});
    const auto complex = build_complex(cloud, 0.6, Metric::L2, 2);
    const auto problem = assemble_lp(complex, cloud);
    const auto solution = oracle::exact_lp(problem, oracle::uniform_masses(2));
    REQUIRE(solution.feasible);
    CHECK(solution.objective == Rational(1, 2));
  }
  SUBCASE("triangle level 3 is exactly 2/3 and level 2 exactly 3/4") {
    const auto cloud = triangle_fixture();
    const auto p3 = assemble_lp(build_complex(cloud, 0.8, Metric::L2, 3), cloud);
    const auto s3 = oracle::exact_lp(p3, oracle::uniform_masses(6));
    REQUIRE(s3.feasible);
    CHECK(s3.objective == Rational(2, 3));

    const auto p2 = assemble_lp(build_complex(cloud, 0.8, Metric::L2, 2), cloud);
    const auto s2 = oracle::exact_lp(p2, oracle::uniform_masses(6));
    REQUIRE(s2.feasible);
    CHECK(s2.objective == Rational(3, 4));
    // The optimum is genuinely fractional: all three inner pairs at 1/12.
    int twelfths = 0;
    for (const auto& w : s2.weights)
      if (w == Rational(1, 12)) ++twelfths;
    CHECK(twelfths == 3);
  }
  SUBCASE("column guard") {
    const auto cloud = triangle_fixture();
    const auto problem =
        assemble_lp(build_complex(cloud, 1.05, Metric::L2, 3), cloud);
    REQUIRE(problem.interaction_matrix.cols() > 12);
    CHECK_THROWS_AS(oracle::exact_lp(problem, oracle::uniform_masses(6)),
                    std::invalid_argument);
  }
}

TEST_CASE("oracle optimum is minimal among sampled feasible points") {
  advot_test::Rng rng(909);
  for (int trial = 0; trial < 30; ++trial) {
    const auto cloud = advot_test::random_cloud(rng, 2, 3, 2, 1.0);
    if (cloud.size() > 6) continue;
    const auto complex =
        build_complex(cloud, rng.uniform(0.2, 1.0), Metric::L2, 2);
    if (complex.total_count() > 12) continue;
    const auto problem = assemble_lp(complex, cloud);
    const auto exact =
        oracle::exact_lp(problem, oracle::uniform_masses(cloud.size()));
    REQUIRE(exact.feasible);
    // The all-singleton point w = m is feasible with objective 1.
    CHECK(exact.objective <= Rational(1));
    // Verify I w = m exactly in rational arithmetic.
    std::vector<Rational> lhs(cloud.size(), Rational(0));
    for (int j = 0; j < problem.interaction_matrix.cols(); ++j)
      for (Eigen::SparseMatrix<double>::InnerIterator it(problem.interaction_matrix, j);
           it; ++it)
        lhs[it.row()] += exact.weights[j];
    for (int r = 0; r < cloud.size(); ++r)
      CHECK(lhs[r] == Rational(1, cloud.size()));
  }
}
