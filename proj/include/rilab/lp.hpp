#pragma once

// Dense two-phase simplex for the small linear programs of the cutting-plane
// loops: minimize c.x subject to A_ub x <= b_ub, A_eq x = b_eq, x >= 0.

#include <vector>

namespace rilab {

struct LinearProgram {
  std::vector<double> c;
  std::vector<std::vector<double>> a_ub;
  std::vector<double> b_ub;
  std::vector<std::vector<double>> a_eq;
  std::vector<double> b_eq;
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

struct LpSolution {
  LpStatus status = LpStatus::kIterationLimit;
  double value = 0;
  std::vector<double> x;
};

/// Bland's rule throughout, so the method terminates on degenerate problems.
LpSolution solve_lp(const LinearProgram& lp, int max_pivots = 20000);

}  // namespace rilab
