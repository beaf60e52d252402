#pragma once

#include "vortexflow/particles.hpp"
#include "vortexflow/transport.hpp"

#include <array>
#include <cmath>
#include <vector>

namespace vortexflow {

/// An exogenous measure path mu_t driving the test-particle drift; must live
/// on the solver's time grid.
using FrozenPath = MeasurePath;

/// S(mu) for atomic nu: each atom of nu is a test particle moved by
///   dr = U(r, mu_t) dt + noise(r)
/// with mu frozen; weights are carried unchanged. For atomic nu the
/// push-forward nu o r^{-1} is exactly this forward transport of atoms.
template <IncrementSource Noise>
MeasurePath s_map(const SignedParticleMeasure& nu, const FrozenPath& frozen, const SolverConfig& cfg,
                  const Noise& noise) {
  cfg.validate();
  detail::check_noise(noise, cfg);
  if (nu.empty()) throw ValidationError("s_map: initial measure has no atoms");
  if (frozen.size() != cfg.steps + 1) throw ValidationError("s_map: frozen path does not match the solver grid");
  const auto grid_times = detail::time_grid(cfg);
  for (std::size_t k = 0; k < grid_times.size(); ++k)
    if (std::abs(frozen.times()[k] - grid_times[k]) > 1e-12 * (1.0 + grid_times[k]))
      throw ValidationError("s_map: frozen path time grid differs from the solver grid");

  const SystemState init(nu);
  std::vector<Point> r = init.positions();
  std::vector<SignedParticleMeasure> states;
  states.reserve(cfg.steps + 1);
  states.push_back(nu);

  std::vector<Point> src;
  std::vector<double> src_w;
  for (std::size_t s = 0; s < cfg.steps; ++s) {
    const auto& mu = frozen[s];
    src.clear();
    src_w.clear();
    for (const auto& a : mu.atoms()) {
      src.push_back(a.position);
      src_w.push_back(a.weight);
    }
    const auto drift = detail::drift_all(r, src, src_w, cfg.kernel);
    const auto dw = detail::step_noise(r, noise.increment(s), cfg);
    for (std::size_t i = 0; i < r.size(); ++i) {
      r[i] = r[i] + drift[i] * cfg.dt + dw[i];
      if (!all_finite(r[i])) throw NumericalError(detail::concat("s_map: non-finite atom ", i, " at step ", s));
    }
    states.push_back(SignedParticleMeasure::from_arrays(nu.dim(), r, init.weights()));
  }
  return MeasurePath(grid_times, std::move(states), std::string(noise.tag()));
}

/// One iterate of the fixed-point scheme eta^{k+1} = S(eta^k).
struct FixedPointStep {
  MeasurePath path;
  double dist_prev_sq = 0.0;  ///< sup_t gamma_2^2(eta^{k+1}_t, eta^k_t)
  double dist_psi_sq = 0.0;   ///< sup_t gamma_2^2(eta^{k+1}_t, Psi(nu)_t)

  double dist_prev() const { return std::sqrt(dist_prev_sq); }
  double dist_psi() const { return std::sqrt(dist_psi_sq); }
};

/// eta^0 = constant path at nu, eta^{k+1} = s_map(nu, eta^k). Distances are
/// single-realization path_gamma values against the previous iterate and
/// against the direct simulation Psi(nu) on the same noise. Stops early
/// once an iterate reproduces its predecessor exactly.
template <IncrementSource Noise>
std::vector<FixedPointStep> fixed_point_iterate(const SignedParticleMeasure& nu, const SolverConfig& cfg,
                                                const Noise& noise, int n_iters) {
  if (n_iters < 2) throw ValidationError("fixed_point_iterate: n_iters must be >= 2");
  const MeasurePath psi = simulate_psi(nu, cfg, noise);
  const auto times = detail::time_grid(cfg);
  MeasurePath prev = MeasurePath::constant(nu, times);
  std::vector<FixedPointStep> out;
  int increasing = 0;
  for (int k = 0; k < n_iters; ++k) {
    FixedPointStep step;
    step.path = s_map(nu, prev, cfg, noise);
    step.dist_prev_sq = path_gamma_sq(step.path, prev);
    step.dist_psi_sq = path_gamma_sq(step.path, psi);
    if (!out.empty() && step.dist_prev_sq > out.back().dist_prev_sq) {
      if (++increasing >= 3)
        throw NumericalError("fixed_point_iterate: distances increased for 3 consecutive iterates; shrink T");
    } else {
      increasing = 0;
    }
    prev = step.path;
    out.push_back(std::move(step));
    if (out.back().dist_prev_sq == 0.0) break;
  }
  return out;
}

/// Uniform 1D grid on [-A, A] with an even number of cells, carrying a
/// sampled signed density. Integration uses composite Simpson, with panels
/// containing a sign change split at the root and integrated by
/// Gauss-Legendre on each side.
class DensityGrid1D {
 public:
  DensityGrid1D(double half_width, double spacing) : a_(half_width) {
    if (!(half_width > 0.0 && spacing > 0.0)) throw ValidationError("DensityGrid1D: A and h must be > 0");
    cells_ = static_cast<std::size_t>(std::ceil(2.0 * half_width / spacing));
    if (cells_ % 2 != 0) ++cells_;
    h_ = 2.0 * half_width / static_cast<double>(cells_);
    values_.assign(cells_ + 1, 0.0);
  }

  double half_width() const { return a_; }
  double spacing() const { return h_; }
  std::size_t size() const { return cells_ + 1; }
  double node(std::size_t k) const { return -a_ + static_cast<double>(k) * h_; }
  const std::vector<double>& values() const { return values_; }

  template <typename F>
  void sample(F&& f) {
    for (std::size_t k = 0; k <= cells_; ++k) values_[k] = f(node(k));
  }

  /// Composite Simpson weights (sum to 2A).
  std::vector<double> weights() const {
    std::vector<double> w(cells_ + 1);
    for (std::size_t k = 0; k <= cells_; ++k) w[k] = (k == 0 || k == cells_) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
    for (auto& v : w) v *= h_ / 3.0;
    return w;
  }

  /// int f over the grid span for smooth f.
  double integrate_sampled() const {
    const auto w = weights();
    double s = 0.0;
    for (std::size_t k = 0; k <= cells_; ++k) s += w[k] * values_[k];
    return s;
  }

  /// int |f| where f is the analytic function whose samples are stored.
  template <typename F>
  double integrate_abs(F&& f) const {
    double total = 0.0;
    for (std::size_t k = 0; k + 2 <= cells_; k += 2) {
      const double y0 = values_[k], y1 = values_[k + 1], y2 = values_[k + 2];
      const bool same_sign = (y0 >= 0 && y1 >= 0 && y2 >= 0) || (y0 <= 0 && y1 <= 0 && y2 <= 0);
      if (same_sign) {
        total += h_ / 3.0 * (std::abs(y0) + 4.0 * std::abs(y1) + std::abs(y2));
        continue;
      }
      for (std::size_t c = k; c < k + 2; ++c) {
        const double lo = node(c), hi = node(c + 1);
        const double flo = values_[c], fhi = values_[c + 1];
        if ((flo > 0 && fhi < 0) || (flo < 0 && fhi > 0)) {
          const double root = bisect(f, lo, hi, flo);
          total += gauss_abs(f, lo, root) + gauss_abs(f, root, hi);
        } else {
          total += gauss_abs(f, lo, hi);
        }
      }
    }
    return total;
  }

 private:
  template <typename F>
  static double bisect(F& f, double lo, double hi, double flo) {
    for (int it = 0; it < 200 && hi - lo > 1e-16 * (1.0 + std::abs(lo)); ++it) {
      const double mid = 0.5 * (lo + hi);
      const double fm = f(mid);
      if ((fm > 0) == (flo > 0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  }

  template <typename F>
  static double gauss_abs(F& f, double lo, double hi) {
    static constexpr std::array<double, 4> x = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                                0.9602898564975363};
    static constexpr std::array<double, 4> w = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                                0.1012285362903763};
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
      s += w[i] * (std::abs(f(mid - half * x[i])) + std::abs(f(mid + half * x[i])));
    return s * half;
  }

  double a_;
  double h_ = 0.0;
  std::size_t cells_ = 0;
  std::vector<double> values_;
};

/// Standard deviations beyond which Gaussian tail mass is below 1e-10.
inline constexpr double kHeatTailSigmas = 6.5;

inline double gaussian_density(double x, double sd) {
  return std::exp(-0.5 * x * x / (sd * sd)) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

/// Total variation of the signed density p_t(x - a) - p_t(x - b), with p_t
/// the N(0, sigma^2 t) density: the image of delta_a - delta_b under the
/// zero-drift heat kernel. A value strictly below 2 means part of the
/// positive and negative mass cancelled.
inline double heat_map_tv(double a, double b, double sigma, double t, const DensityGrid1D& grid_spec) {
  if (!(t > 0.0) || !(sigma > 0.0)) throw ValidationError("heat_map_tv: sigma and t must be > 0");
  const double sd = sigma * std::sqrt(t);
  const double reach = kHeatTailSigmas * sd;
  if (std::min(a, b) - reach < -grid_spec.half_width() || std::max(a, b) + reach > grid_spec.half_width())
    throw ValidationError(detail::concat("heat_map_tv: grid [-", grid_spec.half_width(), ", ",
                                         grid_spec.half_width(), "] does not cover the Gaussian mass"));
  auto density = [&](double x) { return gaussian_density(x - a, sd) - gaussian_density(x - b, sd); };
  DensityGrid1D grid = grid_spec;
  grid.sample(density);
  return grid.integrate_abs(density);
}

/// 2 (2 Phi(|a - b| / (2 sigma sqrt t)) - 1).
inline double heat_map_tv_closed_form(double a, double b, double sigma, double t) {
  const double z = std::abs(a - b) / (2.0 * sigma * std::sqrt(t));
  return 2.0 * std::erf(z / std::sqrt(2.0));
}

/// Grid covering both Gaussians with spacing sd / 100.
inline DensityGrid1D default_heat_grid(double a, double b, double sigma, double t) {
  const double sd = sigma * std::sqrt(t);
  const double half = std::max(std::abs(a), std::abs(b)) + (kHeatTailSigmas + 1.5) * sd;
  return DensityGrid1D(half, sd / 100.0);
}

}  // namespace vortexflow
