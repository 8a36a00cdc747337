#include <doctest.h>

#include "rilab/lp.hpp"
#include "rilab/random.hpp"

using namespace rilab;

TEST_CASE("small programs") {
  // max x + y s.t. x + 2y <= 4, 3x + y <= 6  ->  (8/5, 6/5)
  LinearProgram lp{{-1, -1}, {{1, 2}, {3, 1}}, {4, 6}, {}, {}};
  auto s = solve_lp(lp);
  REQUIRE(s.status == LpStatus::kOptimal);
  CHECK(s.value == doctest::Approx(-2.8));
  CHECK(s.x[0] == doctest::Approx(1.6));
  CHECK(s.x[1] == doctest::Approx(1.2));

  LinearProgram eq{{1, 2, 3}, {}, {}, {{1, 1, 1}}, {1}};
  s = solve_lp(eq);
  REQUIRE(s.status == LpStatus::kOptimal);
  CHECK(s.value == doctest::Approx(1));

  LinearProgram infeasible{{1}, {{1}}, {-1}, {}, {}};
  CHECK(solve_lp(infeasible).status == LpStatus::kInfeasible);
  LinearProgram unbounded{{-1, 0}, {{-1, 1}}, {1}, {}, {}};
  CHECK(solve_lp(unbounded).status == LpStatus::kUnbounded);
  // x >= 2 written as -x <= -2
  LinearProgram negative_rhs{{1}, {{-1}}, {-2}, {}, {}};
  s = solve_lp(negative_rhs);
  REQUIRE(s.status == LpStatus::kOptimal);
  CHECK(s.x[0] == doctest::Approx(2));
}

TEST_CASE("random bounded programs satisfy their constraints and weak duality") {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.index(5), m = 1 + rng.index(8);
    LinearProgram lp;
    for (std::size_t j = 0; j < n; ++j) lp.c.push_back(rng.uniform(-1, 1));
    for (std::size_t i = 0; i < m; ++i) {
      std::vector<double> row;
      for (std::size_t j = 0; j < n; ++j) row.push_back(rng.uniform(-1, 1));
      lp.a_ub.push_back(row);
      lp.b_ub.push_back(rng.uniform(-0.5, 1));
    }
    for (std::size_t j = 0; j < n; ++j) {  // box keeps it bounded
      std::vector<double> row(n, 0.0);
      row[j] = 1;
      lp.a_ub.push_back(row);
      lp.b_ub.push_back(3);
    }
    const auto s = solve_lp(lp);
    if (s.status == LpStatus::kInfeasible) continue;
    REQUIRE(s.status == LpStatus::kOptimal);
    for (std::size_t i = 0; i < lp.a_ub.size(); ++i) {
      double lhs = 0;
      for (std::size_t j = 0; j < n; ++j) lhs += lp.a_ub[i][j] * s.x[j];
      CHECK(lhs <= lp.b_ub[i] + 1e-9);
    }
    // no sampled feasible point does better
    for (int k = 0; k < 200; ++k) {
      std::vector<double> x(n);
      for (double& v : x) v = rng.uniform(0, 3);
      bool feasible = true;
      for (std::size_t i = 0; i < lp.a_ub.size() && feasible; ++i) {
        double lhs = 0;
        for (std::size_t j = 0; j < n; ++j) lhs += lp.a_ub[i][j] * x[j];
        feasible = lhs <= lp.b_ub[i];
      }
      if (!feasible) continue;
      double v = 0;
      for (std::size_t j = 0; j < n; ++j) v += lp.c[j] * x[j];
      CHECK(v >= s.value - 1e-9);
    }
  }
}
