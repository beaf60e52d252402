#pragma once

#include "vortexflow/core.hpp"

#include <cmath>
#include <vector>

namespace vortexflow {

/// maximize c^T x subject to A x <= b, x >= 0, with b >= 0 (so the slack
/// basis is feasible). A is row-major, rows = b.size(), cols = c.size().
struct LinearProgram {
  std::vector<double> c;
  std::vector<double> a;
  std::vector<double> b;

  std::size_t num_vars() const { return c.size(); }
  std::size_t num_constraints() const { return b.size(); }
};

struct LpSolution {
  double objective = 0.0;
  std::vector<double> x;
  std::size_t pivots = 0;
};

/// Dense tableau simplex with Bland's anti-cycling rule.
/// Throws NumericalError if the LP is unbounded or fails to terminate.
inline LpSolution solve_lp(const LinearProgram& lp) {
  const std::size_t n = lp.num_vars(), m = lp.num_constraints();
  if (lp.a.size() != n * m) throw ValidationError("solve_lp: constraint matrix shape mismatch");
  for (double bi : lp.b)
    if (bi < 0.0) throw ValidationError("solve_lp: right-hand side must be nonnegative");

  constexpr double eps = 1e-12;
  const std::size_t width = n + m + 1;  // variables, slacks, rhs
  std::vector<double> t((m + 1) * width, 0.0);
  auto at = [&](std::size_t r, std::size_t col) -> double& { return t[r * width + col]; };
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t j = 0; j < n; ++j) at(r, j) = lp.a[r * n + j];
    at(r, n + r) = 1.0;
    at(r, width - 1) = lp.b[r];
  }
  // Objective row holds reduced costs c_j - z_j; optimal when all <= eps.
  for (std::size_t j = 0; j < n; ++j) at(m, j) = lp.c[j];
  std::vector<std::size_t> basis(m);
  for (std::size_t r = 0; r < m; ++r) basis[r] = n + r;

  LpSolution sol;
  const std::size_t max_pivots = 50 * (n + m) * (n + m) + 1000;
  for (;;) {
    std::size_t enter = width;
    for (std::size_t j = 0; j + 1 < width; ++j)
      if (at(m, j) > eps) {
        enter = j;
        break;
      }
    if (enter == width) break;

    std::size_t leave = m;
    double best = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
      const double coef = at(r, enter);
      if (coef <= eps) continue;
      const double ratio = at(r, width - 1) / coef;
      if (leave == m || ratio < best - eps || (ratio <= best + eps && basis[r] < basis[leave])) {
        leave = r;
        best = ratio;
      }
    }
    if (leave == m) throw NumericalError("solve_lp: unbounded objective");
    if (++sol.pivots > max_pivots) throw NumericalError("solve_lp: pivot limit exceeded");

    const double piv = at(leave, enter);
    for (std::size_t col = 0; col < width; ++col) at(leave, col) /= piv;
    for (std::size_t r = 0; r <= m; ++r) {
      if (r == leave) continue;
      const double f = at(r, enter);
      if (f == 0.0) continue;
      for (std::size_t col = 0; col < width; ++col) at(r, col) -= f * at(leave, col);
    }
    basis[leave] = enter;
  }

  sol.x.assign(n, 0.0);
  for (std::size_t r = 0; r < m; ++r)
    if (basis[r] < n) sol.x[basis[r]] = at(r, width - 1);
  for (std::size_t j = 0; j < n; ++j) sol.objective += lp.c[j] * sol.x[j];
  return sol;
}

}  // namespace vortexflow
