#include "rilab/lp.hpp"

#include <cmath>
#include <stdexcept>

namespace rilab {

namespace {

constexpr double kEps = 1e-11;

struct Tableau {
  std::vector<std::vector<double>> rows;  // each row: coefficients then rhs
  std::vector<double> cost;               // reduced costs, last entry = -objective
  std::vector<std::size_t> basis;
  std::size_t cols = 0;

  void pivot(std::size_t r, std::size_t c) {
    auto& pr = rows[r];
    const double p = pr[c];
    for (double& v : pr) v /= p;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i == r) continue;
      const double f = rows[i][c];
      if (f == 0) continue;
      for (std::size_t j = 0; j <= cols; ++j) rows[i][j] -= f * pr[j];
    }
    const double f = cost[c];
    if (f != 0) {
      for (std::size_t j = 0; j <= cols; ++j) cost[j] -= f * pr[j];
    }
    basis[r] = c;
  }

  /// Runs simplex on the current cost row over columns [0, allowed).
  LpStatus optimize(std::size_t allowed, int& budget) {
    while (true) {
      std::size_t enter = allowed;
      for (std::size_t j = 0; j < allowed; ++j) {
        if (cost[j] < -kEps) {
          enter = j;
          break;
        }
      }
      if (enter == allowed) return LpStatus::kOptimal;
      if (budget-- <= 0) return LpStatus::kIterationLimit;
      std::size_t leave = rows.size();
      double best = 0;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const double a = rows[i][enter];
        if (a <= kEps) continue;
        const double ratio = rows[i][cols] / a;
        if (leave == rows.size() || ratio < best - kEps ||
            (std::abs(ratio - best) <= kEps && basis[i] < basis[leave])) {
          leave = i;
          best = ratio;
        }
      }
      if (leave == rows.size()) return LpStatus::kUnbounded;
      pivot(leave, enter);
    }
  }
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, int max_pivots) {
  const std::size_t n = lp.c.size();
  const std::size_t m_ub = lp.a_ub.size(), m_eq = lp.a_eq.size();
  if (lp.b_ub.size() != m_ub || lp.b_eq.size() != m_eq) throw std::invalid_argument("solve_lp: rhs size mismatch");
  const std::size_t m = m_ub + m_eq;
  // columns: x (n), slacks (m_ub), artificials (m)
  const std::size_t art0 = n + m_ub;
  Tableau t;
  t.cols = art0 + m;
  t.rows.assign(m, std::vector<double>(t.cols + 1, 0.0));
  t.basis.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const bool ub = i < m_ub;
    const auto& a = ub ? lp.a_ub[i] : lp.a_eq[i - m_ub];
    double rhs = ub ? lp.b_ub[i] : lp.b_eq[i - m_ub];
    if (a.size() != n) throw std::invalid_argument("solve_lp: row length mismatch");
    const double sign = rhs < 0 ? -1.0 : 1.0;
    auto& row = t.rows[i];
    for (std::size_t j = 0; j < n; ++j) row[j] = sign * a[j];
    if (ub) row[n + i] = sign;
    row[art0 + i] = 1.0;
    row[t.cols] = sign * rhs;
    t.basis[i] = art0 + i;
  }

  LpSolution out;
  int budget = max_pivots;
  // phase 1: minimize the sum of artificials
  t.cost.assign(t.cols + 1, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j <= t.cols; ++j) t.cost[j] -= t.rows[i][j];
  }
  for (std::size_t i = 0; i < m; ++i) t.cost[art0 + i] = 0;
  auto status = t.optimize(art0, budget);
  if (status == LpStatus::kIterationLimit) {
    out.status = status;
    return out;
  }
  if (-t.cost[t.cols] > 1e-9) {
    out.status = LpStatus::kInfeasible;
    return out;
  }
  // drive remaining artificials out of the basis where possible
  for (std::size_t i = 0; i < m; ++i) {
    if (t.basis[i] < art0) continue;
    for (std::size_t j = 0; j < art0; ++j) {
      if (std::abs(t.rows[i][j]) > 1e-9) {
        t.pivot(i, j);
        break;
      }
    }
  }

  // phase 2
  t.cost.assign(t.cols + 1, 0.0);
  for (std::size_t j = 0; j < n; ++j) t.cost[j] = lp.c[j];
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t b = t.basis[i];
    const double cb = b < n ? lp.c[b] : 0.0;
    if (cb == 0) continue;
    for (std::size_t j = 0; j <= t.cols; ++j) t.cost[j] -= cb * t.rows[i][j];
  }
  status = t.optimize(art0, budget);
  out.status = status;
  if (status != LpStatus::kOptimal) return out;
  out.x.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (t.basis[i] < n) out.x[t.basis[i]] = t.rows[i][t.cols];
  }
  out.value = 0;
  for (std::size_t j = 0; j < n; ++j) out.value += lp.c[j] * out.x[j];
  return out;
}

}  // namespace rilab
