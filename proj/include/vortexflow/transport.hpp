#pragma once

#include "vortexflow/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace vortexflow {

/// Dense row-major cost matrix.
struct CostMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  CostMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

/// Result of an exact transport solve.
struct TransportPlan {
  double cost = 0.0;
  /// Nonzero entries (i, j, mass).
  struct Entry {
    std::size_t i, j;
    double mass;
  };
  std::vector<Entry> entries;
};

/// Square assignment problem (Hungarian algorithm with potentials, O(n^3)).
/// Returns the column assigned to each row.
inline std::vector<std::size_t> solve_assignment(const CostMatrix& cost) {
  if (cost.rows != cost.cols) throw ValidationError("solve_assignment: cost matrix must be square");
  const std::size_t n = cost.rows;
  constexpr double inf = std::numeric_limits<double>::infinity();
  // 1-based arrays; index 0 is the virtual row/column.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> assignment(n);
  for (std::size_t j = 1; j <= n; ++j) assignment[p[j] - 1] = j - 1;
  return assignment;
}

/// Exact transportation problem min sum c_ij pi_ij with row sums `supply`
/// and column sums `demand` (equal totals), by successive shortest paths
/// with Dijkstra on reduced costs. Costs must be nonnegative.
inline TransportPlan solve_transport(std::span<const double> supply, std::span<const double> demand,
                                     const CostMatrix& cost) {
  const std::size_t n = supply.size(), m = demand.size();
  if (cost.rows != n || cost.cols != m) throw ValidationError("solve_transport: cost shape mismatch");
  double total = 0.0;
  for (double s : supply) total += s;
  const double tol = 1e-13 * std::max(total, 1e-300);
  constexpr double inf = std::numeric_limits<double>::infinity();

  std::vector<double> excess(supply.begin(), supply.end());
  std::vector<double> deficit(demand.begin(), demand.end());
  std::vector<double> flow(n * m, 0.0);
  // Node ids: sources [0, n), sinks [n, n + m).
  std::vector<double> pot(n + m, 0.0), dist(n + m);
  std::vector<std::ptrdiff_t> parent(n + m);
  std::vector<char> done(n + m);

  const std::size_t max_augment = 64 * (n + m) * (n + m) + 64;
  for (std::size_t iter = 0;; ++iter) {
    bool any_source = false;
    for (std::size_t i = 0; i < n; ++i) any_source |= excess[i] > tol;
    bool any_sink = false;
    for (std::size_t j = 0; j < m; ++j) any_sink |= deficit[j] > tol;
    if (!any_source || !any_sink) break;
    if (iter >= max_augment) throw NumericalError("solve_transport: augmentation limit exceeded");

    std::fill(dist.begin(), dist.end(), inf);
    std::fill(parent.begin(), parent.end(), -1);
    std::fill(done.begin(), done.end(), 0);
    for (std::size_t i = 0; i < n; ++i)
      if (excess[i] > tol) dist[i] = 0.0;

    for (std::size_t step = 0; step < n + m; ++step) {
      std::size_t v = n + m;
      double best = inf;
      for (std::size_t k = 0; k < n + m; ++k)
        if (!done[k] && dist[k] < best) best = dist[k], v = k;
      if (v == n + m) break;
      done[v] = 1;
      if (v < n) {
        for (std::size_t j = 0; j < m; ++j) {
          const std::size_t w = n + j;
          if (done[w]) continue;
          const double rc = std::max(0.0, cost(v, j) + pot[v] - pot[w]);
          if (dist[v] + rc < dist[w]) {
            dist[w] = dist[v] + rc;
            parent[w] = static_cast<std::ptrdiff_t>(v);
          }
        }
      } else {
        const std::size_t j = v - n;
        for (std::size_t i = 0; i < n; ++i) {
          if (done[i] || flow[i * m + j] <= tol) continue;
          const double rc = std::max(0.0, -cost(i, j) + pot[v] - pot[i]);
          if (dist[v] + rc < dist[i]) {
            dist[i] = dist[v] + rc;
            parent[i] = static_cast<std::ptrdiff_t>(v);
          }
        }
      }
    }

    std::size_t target = n + m;
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t w = n + j;
      if (deficit[j] > tol && dist[w] < inf && (target == n + m || dist[w] < dist[target])) target = w;
    }
    if (target == n + m) throw NumericalError("solve_transport: no augmenting path (mass mismatch?)");
    const double cap = dist[target];
    for (std::size_t k = 0; k < n + m; ++k) pot[k] += std::min(dist[k], cap);

    double push = deficit[target - n];
    std::size_t v = target;
    while (parent[v] >= 0) {
      const std::size_t u = static_cast<std::size_t>(parent[v]);
      if (u >= n) push = std::min(push, flow[v * m + (u - n)]);  // backward arc sink u -> source v
      v = u;
    }
    push = std::min(push, excess[v]);

    v = target;
    while (parent[v] >= 0) {
      const std::size_t u = static_cast<std::size_t>(parent[v]);
      if (u < n)
        flow[u * m + (v - n)] += push;
      else
        flow[v * m + (u - n)] -= push;
      v = u;
    }
    excess[v] -= push;
    deficit[target - n] -= push;
  }

  TransportPlan plan;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double f = flow[i * m + j];
      if (f > tol) {
        plan.entries.push_back({i, j, f});
        plan.cost += f * cost(i, j);
      }
    }
  return plan;
}

namespace detail {

inline double pow_p(double x, double p) {
  if (p == 1.0) return x;
  if (p == 2.0) return x * x;
  return std::pow(x, p);
}

inline double root_p(double x, double p) {
  if (p == 1.0) return x;
  if (p == 2.0) return std::sqrt(x);
  return std::pow(x, 1.0 / p);
}

inline bool uniform_weights(const SignedParticleMeasure& mu) {
  const double w0 = mu[0].weight;
  for (const auto& a : mu.atoms())
    if (std::abs(a.weight - w0) > 1e-12 * w0) return false;
  return true;
}

}  // namespace detail

/// Mass tolerance for the equal-mass precondition of wasserstein().
inline constexpr double kMassTolerance = 1e-9;

/// W_p^p(mu, nu) for nonnegative equal-mass measures with cost rho^p, using
/// plans whose marginals are exactly mu and nu.
inline double wasserstein_pow(const SignedParticleMeasure& mu, const SignedParticleMeasure& nu, double p) {
  if (!(p >= 1.0)) throw ValidationError("wasserstein: p must be >= 1");
  if (mu.dim() != nu.dim()) throw ValidationError("wasserstein: dimension mismatch");
  if (mu.empty() || nu.empty()) throw ValidationError("wasserstein: empty measure");
  if (mu.negative_mass() > 0.0 || nu.negative_mass() > 0.0)
    throw ValidationError("wasserstein: measures must be nonnegative");
  const double m_mu = mu.positive_mass(), m_nu = nu.positive_mass();
  if (std::abs(m_mu - m_nu) > kMassTolerance)
    throw ValidationError(detail::concat("wasserstein: unequal masses ", m_mu, " vs ", m_nu));
  if (!(m_mu > 0.0)) throw ValidationError("wasserstein: zero mass");

  CostMatrix cost(mu.size(), nu.size());
  for (std::size_t i = 0; i < mu.size(); ++i)
    for (std::size_t j = 0; j < nu.size(); ++j)
      cost(i, j) = detail::pow_p(rho(mu[i].position, nu[j].position), p);

  if (mu.size() == nu.size() && detail::uniform_weights(mu) && detail::uniform_weights(nu)) {
    const auto assignment = solve_assignment(cost);
    double total = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) total += cost(i, assignment[i]);
    return total * (m_mu / static_cast<double>(mu.size()));
  }

  std::vector<double> supply(mu.size()), demand(nu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) supply[i] = mu[i].weight;
  // Rescale nu onto mu's mass so the two totals agree to rounding.
  for (std::size_t j = 0; j < nu.size(); ++j) demand[j] = nu[j].weight * (m_mu / m_nu);
  return solve_transport(supply, demand, cost).cost;
}

/// W_p(mu, nu); always <= (mass)^{1/p} since rho <= 1.
inline double wasserstein(const SignedParticleMeasure& mu, const SignedParticleMeasure& nu, double p = 2.0) {
  return detail::root_p(wasserstein_pow(mu, nu, p), p);
}

/// W_p under the mass-scaled plan convention Q(A x R^d) = m mu(A) with m the
/// common mass; equals m^{1/p} times wasserstein().
inline double wasserstein_mass_scaled(const SignedParticleMeasure& mu, const SignedParticleMeasure& nu,
                                      double p = 2.0) {
  return detail::root_p(mu.positive_mass() * wasserstein_pow(mu, nu, p), p);
}

namespace detail {

// W_p^p where an empty pair of parts contributes 0 (both parts must be empty
// together; a zero-mass part matched against a nonzero one is a mass error).
inline double part_pow(const SignedParticleMeasure& a, const SignedParticleMeasure& b, double p) {
  const bool a_zero = a.empty() || a.positive_mass() == 0.0;
  const bool b_zero = b.empty() || b.positive_mass() == 0.0;
  if (a_zero && b_zero) return 0.0;
  return wasserstein_pow(a, b, p);
}

}  // namespace detail

/// gamma_p^p between two measure pairs.
inline double gamma_pow(const MeasurePair& a, const MeasurePair& b, double p = 2.0) {
  return detail::part_pow(a.pos, b.pos, p) + detail::part_pow(a.neg, b.neg, p);
}

/// gamma_p((a.pos, a.neg), (b.pos, b.neg)) = (W_p^p(pos) + W_p^p(neg))^{1/p}.
inline double gamma_p(const MeasurePair& a, const MeasurePair& b, double p = 2.0) {
  return detail::root_p(gamma_pow(a, b, p), p);
}

/// Default path decomposer.
struct HahnJordanDecomposer {
  MeasurePair operator()(const SignedParticleMeasure& chi) const { return hahn_jordan(chi); }
};

/// Decomposer keeping atoms apart by weight sign (no merging).
struct SignSplitDecomposer {
  MeasurePair operator()(const SignedParticleMeasure& chi) const { return sign_split(chi); }
};

/// sup over grid times of gamma_2^2(a_t, b_t). The expectation in the
/// gamma_[0,T] metric is taken over replicas by the caller.
template <typename Decomposer = HahnJordanDecomposer>
double path_gamma_sq(const MeasurePath& a, const MeasurePath& b, Decomposer&& decompose = {}) {
  if (a.times() != b.times()) throw ValidationError("path_gamma: time grids differ");
  double sup = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) sup = std::max(sup, gamma_pow(decompose(a[k]), decompose(b[k]), 2.0));
  return sup;
}

/// sup over grid times of gamma_2(a_t, b_t).
template <typename Decomposer = HahnJordanDecomposer>
double path_gamma(const MeasurePath& a, const MeasurePath& b, Decomposer&& decompose = {}) {
  return std::sqrt(path_gamma_sq(a, b, std::forward<Decomposer>(decompose)));
}

}  // namespace vortexflow
