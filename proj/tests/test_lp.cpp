#include "advot/lp.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "advot/data_io.hpp"
#include "advot/oracle.hpp"
#include "test_util.hpp"

using namespace advot;

namespace {

LabeledPointCloud two_point_cloud(double gap) {
  PointMatrix pts(2, 2);
  pts << 0, 0, gap, 0;
  return LabeledPointCloud::create_uniform(pts, {0, 1});
}

}  // namespace

TEST_CASE("assemble_lp shapes and orderings") {
  SUBCASE("singleton-only complex yields the identity") {
    const auto cloud = triangle_fixture();
    const auto complex = build_complex(cloud, 0.1, Metric::L2, 3);
    const auto problem = assemble_lp(complex, cloud);
    CHECK(problem.interaction_matrix.rows() == 6);
    CHECK(problem.interaction_matrix.cols() == 6);
    Eigen::MatrixXd dense = problem.interaction_matrix;
    CHECK(dense.isApprox(Eigen::MatrixXd::Identity(6, 6)));
    CHECK(problem.marginals.sum() == doctest::Approx(1.0));
  }
  SUBCASE("triangle at eps 0.8 level 3 is 6 x 10 with a weight-3 column") {
    const auto cloud = triangle_fixture();
    const auto complex = build_complex(cloud, 0.8, Metric::L2, 3);
    const auto problem = assemble_lp(complex, cloud);
    CHECK(problem.interaction_matrix.rows() == 6);
    CHECK(problem.interaction_matrix.cols() == 10);
    int triples = 0;
    for (int j = 0; j < 10; ++j) {
      const int nnz = problem.interaction_matrix.col(j).nonZeros();
      CHECK(nnz == problem.column_order[j]);
      if (nnz == 3) ++triples;
    }
    CHECK(triples == 1);
  }
  SUBCASE("two points, one pair: 2 x 3 interaction matrix") {
    const auto cloud = two_point_cloud(1.0);
    const auto complex = build_complex(cloud, 0.6, Metric::L2, 2);
    const auto problem = assemble_lp(complex, cloud);
    Eigen::MatrixXd dense = problem.interaction_matrix;
    Eigen::MatrixXd expected(2, 3);
    expected << 1, 0, 1, 0, 1, 1;
    CHECK(dense.isApprox(expected));
  }
}

TEST_CASE("solve_lp known optima") {
  SUBCASE("singletons only: w = m, objective 1, risk 0") {
    const auto cloud = triangle_fixture();
    const auto complex = build_complex(cloud, 0.1, Metric::L2, 3);
    const auto solution = solve_lp(assemble_lp(complex, cloud));
    CHECK(solution.status == LpStatus::Optimal);
    CHECK(solution.objective == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(solution.risk_lower_bound == doctest::Approx(0.0).epsilon(1e-10));
  }
  SUBCASE("two mergeable points: objective 1/2") {
    const auto cloud = two_point_cloud(1.0);
    const auto complex = build_complex(cloud, 0.6, Metric::L2, 2);
    const auto solution = solve_lp(assemble_lp(complex, cloud));
    CHECK(solution.status == LpStatus::Optimal);
    CHECK(solution.objective == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(solution.risk_lower_bound == doctest::Approx(0.5).epsilon(1e-9));
  }
  SUBCASE("triangle eps 0.8: level 3 gives 2/3, level 2 gives 3/4") {
    const auto cloud = triangle_fixture();
    const auto level3 =
        solve_lp(assemble_lp(build_complex(cloud, 0.8, Metric::L2, 3), cloud));
    CHECK(level3.objective == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
    const auto level2 =
        solve_lp(assemble_lp(build_complex(cloud, 0.8, Metric::L2, 2), cloud));
    CHECK(level2.objective == doctest::Approx(0.75).epsilon(1e-9));
    CHECK(level2.mass_by_order.at(2) == doctest::Approx(0.25));
  }
}

TEST_CASE("lp invariants on random instances") {
  advot_test::Rng rng(505);
  for (int trial = 0; trial < 40; ++trial) {
    const int num_classes = 2 + rng.index(3);
    const auto cloud = advot_test::random_cloud(rng, num_classes, 4, 2, 2.0);
    const double eps = rng.uniform(0.2, 1.5);
    const int level = 1 + rng.index(num_classes);
    const auto complex = build_complex(cloud, eps, Metric::L2, level);
    const auto problem = assemble_lp(complex, cloud);
    const auto solution = solve_lp(problem);
    REQUIRE(solution.status == LpStatus::Optimal);
    CHECK(solution.residual_inf <= 1e-8);
    CHECK(solution.objective >= 1.0 / level - 1e-9);
    CHECK(solution.objective <= 1.0 + 1e-9);
    CHECK(solution.risk_lower_bound >= -1e-9);
    CHECK(solution.risk_lower_bound <= 1.0 - 1.0 / level + 1e-9);
    CHECK(solution.weights.minCoeff() >= -1e-12);
    CHECK(solution.weights.maxCoeff() <= 1.0 + 1e-8);  // w <= 1 is implied
  }
}

TEST_CASE("lp matches the exact rational oracle") {
  advot_test::Rng rng(606);
  int done = 0;
  for (int trial = 0; trial < 500 && done < 60; ++trial) {
    const int num_classes = 2 + rng.index(2);
    const auto cloud = advot_test::random_cloud(rng, num_classes, 3, 2, 1.5);
    if (cloud.size() > 8) continue;
    const double eps = rng.uniform(0.1, 1.0);
    const auto complex = build_complex(cloud, eps, Metric::L2, num_classes);
    if (complex.total_count() > 12) continue;
    const auto problem = assemble_lp(complex, cloud);
    const auto solution = solve_lp(problem);
    REQUIRE(solution.status == LpStatus::Optimal);
    const auto exact =
        oracle::exact_lp(problem, oracle::uniform_masses(cloud.size()));
    REQUIRE(exact.feasible);
    CHECK(solution.objective ==
          doctest::Approx(static_cast<double>(exact.objective)).epsilon(1e-7));
    ++done;
  }
  CHECK(done == 60);
}

TEST_CASE("risk is monotone in eps and level") {
  advot_test::Rng rng(707);
  const auto cloud = advot_test::random_cloud(rng, 3, 4, 2, 1.5);
  double previous = -1.0;
  for (double eps : {0.2, 0.4, 0.6, 0.8, 1.0}) {
    const auto solution =
        solve_lp(assemble_lp(build_complex(cloud, eps, Metric::L2, 3), cloud));
    CHECK(solution.risk_lower_bound >= previous - 1e-9);
    previous = solution.risk_lower_bound;
  }
  double by_level = -1.0;
  for (int level : {1, 2, 3}) {
    const auto solution =
        solve_lp(assemble_lp(build_complex(cloud, 0.8, Metric::L2, level), cloud));
    CHECK(solution.risk_lower_bound >= by_level - 1e-9);
    by_level = solution.risk_lower_bound;
  }
}

TEST_CASE("recover_attack") {
  SUBCASE("identity attack from singletons") {
    const auto cloud = triangle_fixture();
    const auto complex = build_complex(cloud, 0.1, Metric::L2, 2);
    const auto solution = solve_lp(assemble_lp(complex, cloud));
    const auto plan = recover_attack(solution, complex, cloud);
    CHECK(plan.barycenter.size() == 6);
    for (int cls = 0; cls < 6; ++cls) {
      REQUIRE(plan.attacked[cls].size() == 1);
      const auto& [point, mass] = plan.attacked[cls][0];
      CHECK(mass == doctest::Approx(cloud.masses[cloud.global_index(cls, 0)]));
      CHECK((point - cloud.points.row(cloud.global_index(cls, 0)).transpose())
                .norm() < 1e-12);
    }
  }
  SUBCASE("two-point merge: one midpoint atom of mass 1/2") {
    const auto cloud = two_point_cloud(1.0);
    const auto complex = build_complex(cloud, 0.6, Metric::L2, 2);
    const auto solution = solve_lp(assemble_lp(complex, cloud));
    const auto plan = recover_attack(solution, complex, cloud);
    REQUIRE(plan.barycenter.size() == 1);
    CHECK(plan.barycenter[0].second == doctest::Approx(0.5));
    CHECK((plan.barycenter[0].first - Eigen::Vector2d(0.5, 0.0)).norm() < 1e-12);
    CHECK(plan.attacked[0].size() == 1);
    CHECK(plan.attacked[1].size() == 1);
    CHECK(plan.mass_by_order.at(2) == doctest::Approx(0.5));
  }
  SUBCASE("triangle eps 0.8 level 3: circumcenter atom plus outer singletons") {
    const auto cloud = triangle_fixture();
    const auto complex = build_complex(cloud, 0.8, Metric::L2, 3);
    const auto solution = solve_lp(assemble_lp(complex, cloud));
    const auto plan = recover_attack(solution, complex, cloud);
    CHECK(plan.mass_by_order.at(1) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(plan.mass_by_order.at(3) == doctest::Approx(1.0 / 6.0).epsilon(1e-9));
    CHECK(plan.mass_by_order.count(2) == 0);
    // The triple's atom sits at the inner circumcenter (the origin).
    bool found_center = false;
    for (const auto& [point, mass] : plan.barycenter)
      if (point.norm() < 1e-9) {
        found_center = true;
        CHECK(mass == doctest::Approx(1.0 / 6.0));
      }
    CHECK(found_center);
  }
  SUBCASE("attack masses match class masses") {
    advot_test::Rng rng(808);
    for (int trial = 0; trial < 20; ++trial) {
      const auto cloud = advot_test::random_cloud(rng, 3, 3, 2, 1.5);
      const auto complex =
          build_complex(cloud, rng.uniform(0.3, 1.2), Metric::L2, 3);
      const auto solution = solve_lp(assemble_lp(complex, cloud));
      REQUIRE(solution.status == LpStatus::Optimal);
      const auto plan = recover_attack(solution, complex, cloud);
      for (int cls = 0; cls < cloud.num_classes; ++cls) {
        double total = 0.0;
        for (const auto& [point, mass] : plan.attacked[cls]) total += mass;
        CHECK(total == doctest::Approx(cloud.class_masses(cls).sum()).epsilon(1e-9));
      }
    }
  }
  SUBCASE("rejects non-optimal solutions") {
    const auto cloud = two_point_cloud(1.0);
    const auto complex = build_complex(cloud, 0.6, Metric::L2, 2);
    auto solution = solve_lp(assemble_lp(complex, cloud));
    solution.status = LpStatus::IterationLimit;
    CHECK_THROWS_AS(recover_attack(solution, complex, cloud), std::invalid_argument);
  }
}

TEST_CASE("solution serialization") {
  const auto cloud = triangle_fixture();
  const auto complex = build_complex(cloud, 0.8, Metric::L2, 3);
  const auto solution = solve_lp(assemble_lp(complex, cloud));
  const auto doc = lp_solution_to_json(solution);
  CHECK(doc.at("status") == "optimal");
  CHECK(doc.at("objective").get<double>() == doctest::Approx(2.0 / 3.0));
  CHECK(doc.at("risk_lower_bound").get<double>() == doctest::Approx(1.0 / 3.0));
  CHECK(doc.at("nnz_weights").size() == 4);  // three outer singletons + the triple
  CHECK(doc.at("mass_by_order").contains("3"));
}

TEST_CASE("hand-built problems without identity start") {
  // Feasible: two rows, one column covering both (w = 1/2 forces equal
  // marginals). Exercises the artificial-variable phase.
  Eigen::SparseMatrix<double> matrix(2, 1);
  matrix.insert(0, 0) = 1.0;
  matrix.insert(1, 0) = 1.0;
  matrix.makeCompressed();
  LpProblem problem;
  problem.interaction_matrix = matrix;
  problem.marginals = Eigen::Vector2d(0.5, 0.5);
  problem.column_order = {2};
  const auto solution = solve_lp(problem);
  CHECK(solution.status == LpStatus::Optimal);
  CHECK(solution.objective == doctest::Approx(0.5));

  // Infeasible: same column but unequal marginals.
  LpProblem bad = problem;
  bad.marginals = Eigen::Vector2d(0.5, 0.25);
  const auto failed = solve_lp(bad);
  CHECK(failed.status == LpStatus::Infeasible);
}

TEST_CASE("wall-clock guard returns the best iterate") {
  advot_test::Rng rng(991);
  const auto cloud = advot_test::random_cloud(rng, 4, 12, 2, 1.0);
  const auto complex = build_complex(cloud, 0.9, Metric::L2, 3);
  const auto problem = assemble_lp(complex, cloud);
  LpSolverOptions opts;
  opts.time_limit_seconds = 1e-9;
  const auto limited = solve_lp(problem, opts);
  CHECK(limited.status == LpStatus::IterationLimit);
  // The returned iterate is still a basic feasible point.
  CHECK(limited.residual_inf <= 1e-8);
  CHECK(limited.weights.minCoeff() >= 0.0);
}
