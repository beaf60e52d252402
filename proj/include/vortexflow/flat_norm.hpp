#pragma once

#include "vortexflow/measure.hpp"
#include "vortexflow/simplex.hpp"
#include "vortexflow/transport.hpp"

#include <cmath>
#include <vector>

namespace vortexflow {

/// sup |<chi, f>| over f with Lipschitz constant <= 1 w.r.t. rho and, when
/// `bounded`, also sup|f| <= 1. Solved exactly as a finite LP on the atom
/// values f_i.
///
/// With bounded = false the supremum is finite only if the weights of chi
/// sum to zero; otherwise a ValidationError is thrown.
inline double flat_norm(const SignedParticleMeasure& chi, bool bounded) {
  const SignedParticleMeasure c = chi.canonical();
  const std::size_t n = c.size();
  if (n == 0) return 0.0;

  double sum = 0.0, scale = 0.0;
  for (const auto& a : c.atoms()) {
    sum += a.weight;
    scale += std::abs(a.weight);
  }
  if (!bounded && std::abs(sum) > 1e-12 * scale)
    throw ValidationError(detail::concat("flat_norm: unbounded LP, weights sum to ", sum, " (expected 0)"));

  // f_i = g_i - shift with g_i >= 0: shift = 1 for the bounded problem
  // (g in [0, 2]); for the unbounded problem any optimum can be translated
  // so that min g = 0 without changing the objective.
  const double shift = bounded ? 1.0 : 0.0;
  LinearProgram lp;
  const std::size_t pair_rows = n * (n - 1);
  const std::size_t rows = pair_rows + (bounded ? n : 0);
  lp.c.resize(n);
  for (std::size_t i = 0; i < n; ++i) lp.c[i] = c[i].weight;
  lp.a.assign(rows * n, 0.0);
  lp.b.assign(rows, 0.0);
  std::size_t r = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      lp.a[r * n + i] = 1.0;
      lp.a[r * n + j] = -1.0;
      lp.b[r] = rho(c[i].position, c[j].position);
      ++r;
    }
  if (bounded)
    for (std::size_t i = 0; i < n; ++i, ++r) {
      lp.a[r * n + i] = 1.0;
      lp.b[r] = 2.0;
    }

  // sup |<chi,f>| = max(sup <chi,f>, sup <-chi,f>); the feasible set is
  // symmetric under f -> -f, so the two coincide and one solve suffices.
  const LpSolution sol = solve_lp(lp);
  return std::abs(sol.objective - shift * sum);
}

/// One row of the completeness counterexample table.
struct CounterexampleRow {
  enum class Kind { pairwise_gamma2, flat_norm } kind;
  int n = 0;
  int m = 0;  // 0 for flat-norm rows
  double value = 0.0;
};

/// mu_n = delta_{1/n} - delta_0 in one dimension.
inline SignedParticleMeasure counterexample_measure(int n) {
  if (n < 1) throw ValidationError("counterexample: n must be >= 1");
  SignedParticleMeasure mu(1);
  mu.add(make_point({1.0 / n}), 1.0);
  mu.add(make_point({0.0}), -1.0);
  return mu;
}

/// gamma_2 between the Hahn-Jordan pairs of mu_n and mu_m for every pair of
/// list positions i < j, plus the bounded flat norm of each mu_n.
inline std::vector<CounterexampleRow> counterexample_table(const std::vector<int>& ns) {
  std::vector<CounterexampleRow> rows;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const auto pn = hahn_jordan(counterexample_measure(ns[i]));
    for (std::size_t j = i + 1; j < ns.size(); ++j) {
      const auto pm = hahn_jordan(counterexample_measure(ns[j]));
      rows.push_back({CounterexampleRow::Kind::pairwise_gamma2, ns[i], ns[j], gamma_p(pn, pm, 2.0)});
    }
  }
  for (int n : ns)
    rows.push_back({CounterexampleRow::Kind::flat_norm, n, 0, flat_norm(counterexample_measure(n), true)});
  return rows;
}

}  // namespace vortexflow
