#pragma once

#include "vortexflow/flat_norm.hpp"
#include "vortexflow/test_functions.hpp"
#include "vortexflow/transport_maps.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

namespace vortexflow {

// ---------------------------------------------------------------------------
// Initial measures

/// n atoms evenly spaced on a circle, alternating sign starting positive.
/// Positive atoms share m1, negative atoms share m2.
inline SignedParticleMeasure ring_measure(int n, double radius, double m1, double m2, int dim = 2) {
  if (n < 1) throw ValidationError("particles.n must be >= 1");
  if (!(radius > 0.0)) throw ValidationError("particles.radius must be > 0");
  if (!(m1 > 0.0) || m2 < 0.0) throw ValidationError("particles.m1 must be > 0 and particles.m2 >= 0");
  const int n_pos = (n + 1) / 2;
  const int n_neg = n / 2;
  if (n_neg > 0 && m2 == 0.0) throw ValidationError("particles.m2 must be > 0 when negative atoms are present");
  SignedParticleMeasure mu(dim);
  for (int i = 0; i < n; ++i) {
    const double a = kTwoPi * i / n;
    Point p = Point::Zero(dim);
    if (dim == 1) {
      p[0] = radius * std::cos(a);
    } else {
      p[0] = radius * std::cos(a);
      p[1] = radius * std::sin(a);
    }
    mu.add(std::move(p), i % 2 == 0 ? m1 / n_pos : -m2 / n_neg);
  }
  if (mu.canonical().size() != mu.size()) throw ValidationError("ring_measure: atoms coincide (use dim >= 2)");
  return mu;
}

/// n atoms uniform in the disk/ball of the given radius, alternating sign.
inline SignedParticleMeasure random_measure(int n, double radius, double m1, double m2, int dim, std::uint64_t seed) {
  if (n < 1) throw ValidationError("particles.n must be >= 1");
  const int n_pos = (n + 1) / 2;
  const int n_neg = n / 2;
  Engine engine = make_engine(derive_seed(seed, {static_cast<std::uint64_t>(StreamPurpose::initial_condition)}));
  boost::random::uniform_real_distribution<double> u(-1.0, 1.0);
  SignedParticleMeasure mu(dim);
  for (int i = 0; i < n; ++i) {
    Point p(dim);
    do {
      for (int k = 0; k < dim; ++k) p[k] = u(engine);
    } while (p.squaredNorm() > 1.0);
    mu.add(radius * p, i % 2 == 0 ? m1 / n_pos : -m2 / n_neg);
  }
  return mu;
}

// ---------------------------------------------------------------------------
// Statistics

struct SampleStats {
  double mean = 0.0;
  double variance = 0.0;  ///< unbiased
  double stderr_mean = 0.0;
  double stderr_variance = 0.0;
  std::size_t n = 0;
};

inline SampleStats sample_stats(std::span<const double> xs) {
  SampleStats s;
  s.n = xs.size();
  if (s.n == 0) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n < 2) return s;
  double m2 = 0.0, m4 = 0.0;
  for (double x : xs) {
    const double d = x - s.mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  const double nn = static_cast<double>(s.n);
  s.variance = m2 / (nn - 1.0);
  s.stderr_mean = std::sqrt(s.variance / nn);
  const double mu2 = m2 / nn, mu4 = m4 / nn;
  s.stderr_variance = std::sqrt(std::max(0.0, mu4 - mu2 * mu2) / nn);
  return s;
}

// ---------------------------------------------------------------------------
// Ratio tables

struct RatioRow {
  double scale_or_t = 0.0;
  double num = 0.0;
  double den = 0.0;
  double ratio = 0.0;
  double stderr = 0.0;
  std::size_t replicas = 0;
};

struct RatioTable {
  std::vector<RatioRow> rows;

  void add(RatioRow r) {
    if (!(r.den > 0.0)) throw NumericalError(detail::concat("ratio table: non-positive denominator at ", r.scale_or_t));
    rows.push_back(r);
  }
  std::vector<double> ratios() const {
    std::vector<double> out;
    for (const auto& r : rows) out.push_back(r.ratio);
    return out;
  }
};

inline void write_csv(std::ostream& out, const RatioTable& table) {
  out << "scale_or_T,num,den,ratio,stderr,replicas\n";
  out.precision(12);
  for (const auto& r : table.rows)
    out << r.scale_or_t << ',' << r.num << ',' << r.den << ',' << r.ratio << ',' << r.stderr << ',' << r.replicas
        << '\n';
}

/// Least-squares slope of log y against log x.
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("loglog_slope: need >= 2 matching points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw ValidationError("loglog_slope: values must be > 0");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// ---------------------------------------------------------------------------
// Weak-equation residual

/// M_f(t_k) and predicted quadratic variation along one path.
struct ResidualSeries {
  std::vector<double> times;
  std::vector<double> residual;
  std::vector<double> predicted_qv;
};

/// M_f(t_k) = <chi_k, f> - <chi_0, f> - sum_{s<k} <chi_s, L(chi_s) f> dt and
/// QV(t_k) = sum_{s<k} sum_{i,j} a_i a_j grad f(r_i)^T G(r_i, r_j) grad f(r_j) dt.
template <IncrementSource Noise>
ResidualSeries weak_residual(const MeasurePath& path, const TestFunction& f, const Noise& noise,
                             const SolverConfig& cfg) {
  if (path.noise_tag() != std::string(noise.tag()))
    throw ValidationError("weak_residual: path was not produced by this noise record");
  if (path.size() != cfg.steps + 1) throw ValidationError("weak_residual: path length does not match the solver");
  ResidualSeries out;
  out.times = path.times();
  out.residual.assign(path.size(), 0.0);
  out.predicted_qv.assign(path.size(), 0.0);

  const double f0 = path.front().integrate(f.value);
  double drift_acc = 0.0;
  double qv_acc = 0.0;
  std::vector<Vector> grads;
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    const auto& chi = path[k];
    double gen = 0.0;
    grads.clear();
    for (const auto& a : chi.atoms()) {
      gen += a.weight * apply_generator(f, a.position, chi, cfg.kernel, cfg.gamma);
      grads.push_back(f.gradient(a.position));
    }
    double qv = 0.0;
    const auto& atoms = chi.atoms();
    for (std::size_t i = 0; i < atoms.size(); ++i)
      for (std::size_t j = 0; j < atoms.size(); ++j)
        qv += atoms[i].weight * atoms[j].weight * grads[i].dot(grads[j]) *
              g_covariance_scalar(atoms[i].position, atoms[j].position, cfg.gamma);
    drift_acc += gen * cfg.dt;
    qv_acc += qv * cfg.dt;
    out.residual[k + 1] = path[k + 1].integrate(f.value) - f0 - drift_acc;
    out.predicted_qv[k + 1] = qv_acc;
  }
  return out;
}

/// Per-checkpoint residual statistics over replicas.
struct ResidualReport {
  RatioTable variance_ratio;  ///< num = Var M_f(t), den = mean QV(t)
  std::vector<double> times;
  std::vector<SampleStats> mean;  ///< stats of M_f(t) per checkpoint
};

/// Runs `replicas` independent systems from nu and summarizes M_f at
/// `checkpoints` evenly spaced times (the last one is T).
inline ResidualReport residual_experiment(const SignedParticleMeasure& nu, const TestFunction& f,
                                          const SolverConfig& cfg, std::size_t replicas, std::uint64_t seed,
                                          std::size_t checkpoints = 10) {
  if (replicas < 2) throw ValidationError("experiment.replicas must be >= 2");
  checkpoints = std::clamp<std::size_t>(checkpoints, 1, cfg.steps);
  std::vector<std::size_t> idx;
  for (std::size_t c = 1; c <= checkpoints; ++c) idx.push_back(c * cfg.steps / checkpoints);

  std::vector<std::vector<double>> m(idx.size()), qv(idx.size());
  for (std::size_t r = 0; r < replicas; ++r) {
    NoiseStream noise(cfg.grid, cfg.dt, cfg.steps, seed, r, cfg.noise_mode);
    const auto path = simulate_psi(nu, cfg, noise);
    const auto series = weak_residual(path, f, noise, cfg);
    for (std::size_t c = 0; c < idx.size(); ++c) {
      m[c].push_back(series.residual[idx[c]]);
      qv[c].push_back(series.predicted_qv[idx[c]]);
    }
  }
  ResidualReport rep;
  for (std::size_t c = 0; c < idx.size(); ++c) {
    const auto sm = sample_stats(m[c]);
    const auto sq = sample_stats(qv[c]);
    const double t = static_cast<double>(idx[c]) * cfg.dt;
    RatioRow row{t, sm.variance, sq.mean, 0.0, 0.0, replicas};
    if (sq.mean > 0.0) {
      row.ratio = sm.variance / sq.mean;
      row.stderr = sm.stderr_variance / sq.mean;
      rep.variance_ratio.add(row);
    }
    rep.times.push_back(t);
    rep.mean.push_back(sm);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Continuity of Psi in the initial condition

/// Unit direction per atom, fixed by the seed.
inline std::vector<Vector> perturbation_directions(std::size_t n, int dim, std::uint64_t seed) {
  Engine engine = make_engine(derive_seed(seed, {static_cast<std::uint64_t>(StreamPurpose::perturbation)}));
  boost::random::normal_distribution<double> normal;
  std::vector<Vector> dirs;
  for (std::size_t i = 0; i < n; ++i) {
    Vector v(dim);
    do {
      for (int k = 0; k < dim; ++k) v[k] = normal(engine);
    } while (v.norm() < 1e-8);
    dirs.push_back(v / v.norm());
  }
  return dirs;
}

inline SignedParticleMeasure perturb(const SignedParticleMeasure& chi, const std::vector<Vector>& dirs, double delta) {
  SignedParticleMeasure out(chi.dim());
  for (std::size_t i = 0; i < chi.size(); ++i) out.add(chi[i].position + delta * dirs[i], chi[i].weight);
  return out;
}

/// sup_t flat_norm(a_t - b_t)^2 at `checkpoints` evenly spaced grid times.
inline double sup_flat_sq(const MeasurePath& a, const MeasurePath& b, std::size_t checkpoints) {
  if (a.times() != b.times()) throw ValidationError("sup_flat_sq: time grids differ");
  const std::size_t last = a.size() - 1;
  checkpoints = std::clamp<std::size_t>(checkpoints, 1, std::max<std::size_t>(last, 1));
  double best = 0.0;
  for (std::size_t c = 0; c <= checkpoints; ++c) {
    const std::size_t k = c * last / checkpoints;
    const double v = flat_norm(a[k] - b[k], false);
    best = std::max(best, v * v);
  }
  return best;
}

struct ContinuityResult {
  RatioTable gamma;  ///< num = gamma_[0,T] estimate, den = gamma_2(chi0, eta0)
  RatioTable flat;   ///< num = E sup_t flat^2, den = gamma_2^2(chi0, eta0)
};

/// For each delta, eta0 = chi0 with every atom moved by delta along a fixed
/// unit direction; both systems run on the replica's noise (shared) or eta
/// on an unrelated stream (shared = false, the negative control).
inline ContinuityResult continuity_experiment(const SignedParticleMeasure& chi0, const std::vector<double>& scales,
                                              std::size_t replicas, const SolverConfig& cfg, std::uint64_t seed,
                                              bool shared = true, std::size_t flat_checkpoints = 20) {
  if (replicas < 2) throw ValidationError("experiment.replicas must be >= 2");
  if (scales.empty()) throw ValidationError("experiment.scales must not be empty");
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (!(scales[i] > 0.0)) throw ValidationError("experiment.scales must be > 0");
    if (i > 0 && !(scales[i] < scales[i - 1])) throw ValidationError("experiment.scales must be decreasing");
  }
  const auto dirs = perturbation_directions(chi0.size(), chi0.dim(), seed);
  const std::uint64_t other_seed =
      derive_seed(seed, {static_cast<std::uint64_t>(StreamPurpose::independent_control)});

  std::vector<std::vector<double>> sup_g(scales.size()), sup_f(scales.size());
  for (std::size_t r = 0; r < replicas; ++r) {
    NoiseStream noise(cfg.grid, cfg.dt, cfg.steps, seed, r, cfg.noise_mode);
    NoiseStream other(cfg.grid, cfg.dt, cfg.steps, shared ? seed : other_seed, r, cfg.noise_mode);
    const auto chi = simulate_psi(chi0, cfg, noise);
    for (std::size_t s = 0; s < scales.size(); ++s) {
      const auto eta = simulate_psi(perturb(chi0, dirs, scales[s]), cfg, other);
      sup_g[s].push_back(path_gamma_sq(chi, eta));
      sup_f[s].push_back(sup_flat_sq(chi, eta, flat_checkpoints));
    }
  }

  ContinuityResult res;
  for (std::size_t s = 0; s < scales.size(); ++s) {
    const double g0 = gamma_p(hahn_jordan(chi0), hahn_jordan(perturb(chi0, dirs, scales[s])), 2.0);
    const auto sg = sample_stats(sup_g[s]);
    const auto sf = sample_stats(sup_f[s]);
    const double num = std::sqrt(sg.mean);
    const double se_num = num > 0.0 ? sg.stderr_mean / (2.0 * num) : 0.0;
    res.gamma.add({scales[s], num, g0, num / g0, se_num / g0, replicas});
    res.flat.add({scales[s], sf.mean, g0 * g0, sf.mean / (g0 * g0), sf.stderr_mean / (g0 * g0), replicas});
  }
  return res;
}

// ---------------------------------------------------------------------------
// Contraction of S

struct ContractionResult {
  RatioTable ratio;  ///< gamma^2_[0,T](S mu, S eta) / gamma^2_[0,T](mu, eta)
  RatioTable bound;  ///< int_0^T E gamma_2^2(mu_t, eta_t) dt / gamma^2_[0,T](mu, eta)
  double t_star = 0.0;  ///< largest horizon whose ratio is below 1 (0 if none)
};

/// mu = constant path at nu, eta = Psi(nu) on an independent stream; both
/// are pushed through S with the replica's shared noise. Horizons reuse the
/// same counter-based increments, so the rows are coupled.
inline ContractionResult contraction_experiment(const SignedParticleMeasure& nu, const std::vector<double>& horizons,
                                                std::size_t replicas, const SolverConfig& base, std::uint64_t seed) {
  if (replicas < 2) throw ValidationError("experiment.replicas must be >= 2");
  if (horizons.empty()) throw ValidationError("experiment.horizons must not be empty");
  ContractionResult res;
  for (std::size_t h = 0; h < horizons.size(); ++h) {
    const double t_end = horizons[h];
    if (!(t_end > 0.0) || (h > 0 && !(t_end > horizons[h - 1])))
      throw ValidationError("experiment.horizons must be positive and increasing");
    const double steps_real = t_end / base.dt;
    const auto steps = static_cast<std::size_t>(std::llround(steps_real));
    if (steps == 0 || std::abs(steps_real - static_cast<double>(steps)) > 1e-9 * steps_real)
      throw ValidationError(
          detail::concat("experiment.horizons entry ", t_end, " is not a multiple of solver.dt=", base.dt));
    SolverConfig cfg = base;
    cfg.steps = steps;
    const auto times = detail::time_grid(cfg);
    const std::uint64_t other_seed =
        derive_seed(seed, {static_cast<std::uint64_t>(StreamPurpose::independent_control)});

    std::vector<double> num, den, integ;
    const MeasurePath mu = MeasurePath::constant(nu, times);
    for (std::size_t r = 0; r < replicas; ++r) {
      NoiseStream shared(cfg.grid, cfg.dt, cfg.steps, seed, r, cfg.noise_mode);
      NoiseStream indep(cfg.grid, cfg.dt, cfg.steps, other_seed, r, cfg.noise_mode);
      const MeasurePath eta = simulate_psi(nu, cfg, indep);
      num.push_back(path_gamma_sq(s_map(nu, mu, cfg, shared), s_map(nu, eta, cfg, shared)));
      den.push_back(path_gamma_sq(mu, eta));
      double acc = 0.0;
      for (std::size_t k = 0; k < cfg.steps; ++k)
        acc += gamma_pow(hahn_jordan(mu[k]), hahn_jordan(eta[k]), 2.0) * cfg.dt;
      integ.push_back(acc);
    }
    const auto sn = sample_stats(num), sd = sample_stats(den), si = sample_stats(integ);
    // Delta-method standard error of a ratio of means of paired samples.
    auto ratio_se = [&](const std::vector<double>& a, const SampleStats& sa) {
      const double q = sa.mean / sd.mean;
      std::vector<double> lin(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) lin[i] = (a[i] - q * den[i]) / sd.mean;
      return sample_stats(lin).stderr_mean;
    };
    res.ratio.add({t_end, sn.mean, sd.mean, sn.mean / sd.mean, ratio_se(num, sn), replicas});
    res.bound.add({t_end, si.mean, sd.mean, si.mean / sd.mean, ratio_se(integ, si), replicas});
    if (sn.mean / sd.mean < 1.0 && res.t_star == (h == 0 ? 0.0 : horizons[h - 1])) res.t_star = t_end;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Fixed point of S over replicas

struct FixedPointRow {
  int iter = 0;
  double dist_prev = 0.0;  ///< gamma_[0,T](eta^{k}, eta^{k-1}) over replicas
  double dist_psi = 0.0;   ///< gamma_[0,T](eta^{k}, Psi(nu))
  std::size_t replicas = 0;
};

namespace detail {

/// eta^1..eta^n without divergence checks; stops after an exact repeat.
template <IncrementSource Noise>
std::vector<FixedPointStep> fixed_point_sequence(const SignedParticleMeasure& nu, const SolverConfig& cfg,
                                                 const Noise& noise, const MeasurePath& psi, int n_iters) {
  MeasurePath prev = MeasurePath::constant(nu, detail::time_grid(cfg));
  std::vector<FixedPointStep> out;
  for (int k = 0; k < n_iters; ++k) {
    FixedPointStep step;
    step.path = s_map(nu, prev, cfg, noise);
    step.dist_prev_sq = path_gamma_sq(step.path, prev);
    step.dist_psi_sq = path_gamma_sq(step.path, psi);
    prev = step.path;
    out.push_back(std::move(step));
    if (out.back().dist_prev_sq == 0.0) break;
  }
  return out;
}

}  // namespace detail

/// Replica-averaged fixed-point iteration; distances are root-mean-square of
/// the per-replica sup_t gamma_2^2, i.e. estimates of gamma_[0,T]. Throws if
/// the averaged distance rises three iterates in a row.
inline std::vector<FixedPointRow> fixed_point_experiment(const SignedParticleMeasure& nu, const SolverConfig& cfg,
                                                         std::size_t replicas, int n_iters, std::uint64_t seed) {
  if (n_iters < 2) throw ValidationError("experiment.iters must be >= 2");
  if (replicas < 1) throw ValidationError("experiment.replicas must be >= 1");
  detail::require_canonical(nu);
  std::vector<double> prev_sq(static_cast<std::size_t>(n_iters), 0.0), psi_sq(prev_sq.size(), 0.0);
  for (std::size_t r = 0; r < replicas; ++r) {
    NoiseStream noise(cfg.grid, cfg.dt, cfg.steps, seed, r, cfg.noise_mode);
    const MeasurePath psi = simulate_psi(nu, cfg, noise);
    const auto seq = detail::fixed_point_sequence(nu, cfg, noise, psi, n_iters);
    for (std::size_t k = 0; k < seq.size(); ++k) {
      prev_sq[k] += seq[k].dist_prev_sq;
      psi_sq[k] += seq[k].dist_psi_sq;
    }
    // After an exact repeat every later iterate equals the fixed point.
    for (std::size_t k = seq.size(); k < prev_sq.size(); ++k) psi_sq[k] += seq.back().dist_psi_sq;
  }
  std::vector<FixedPointRow> rows;
  int increasing = 0;
  for (std::size_t k = 0; k < prev_sq.size(); ++k) {
    FixedPointRow row{static_cast<int>(k + 1), std::sqrt(prev_sq[k] / static_cast<double>(replicas)),
                      std::sqrt(psi_sq[k] / static_cast<double>(replicas)), replicas};
    if (!rows.empty() && row.dist_prev > rows.back().dist_prev) {
      if (++increasing >= 3)
        throw NumericalError("fixed point: distances increased for 3 consecutive iterates; shrink solver.T");
    } else {
      increasing = 0;
    }
    rows.push_back(row);
  }
  return rows;
}

inline void write_csv(std::ostream& out, const std::vector<FixedPointRow>& rows) {
  out << "iter,dist_prev,dist_psi\n";
  out.precision(12);
  for (const auto& r : rows) out << r.iter << ',' << r.dist_prev << ',' << r.dist_psi << '\n';
}

// ---------------------------------------------------------------------------
// Disproof table

struct TvRow {
  double gap = 0.0;
  double sigma = 0.0;
  double t = 0.0;
  double tv_quadrature = 0.0;
  double tv_closed_form = 0.0;
};

/// delta_{-gap/2} - delta_{gap/2} pushed through the heat kernel.
inline std::vector<TvRow> disproof_table(const std::vector<double>& gaps, double sigma, double t) {
  std::vector<TvRow> rows;
  for (double g : gaps) {
    if (g < 0.0) throw ValidationError("experiment.gaps must be >= 0");
    const double a = -0.5 * g, b = 0.5 * g;
    rows.push_back({g, sigma, t, heat_map_tv(a, b, sigma, t, default_heat_grid(a, b, sigma, t)),
                    heat_map_tv_closed_form(a, b, sigma, t)});
  }
  return rows;
}

inline void write_csv(std::ostream& out, const std::vector<TvRow>& rows) {
  out << "gap,sigma,t,tv_quadrature,tv_closed_form\n";
  out.precision(12);
  for (const auto& r : rows)
    out << r.gap << ',' << r.sigma << ',' << r.t << ',' << r.tv_quadrature << ',' << r.tv_closed_form << '\n';
}

inline void write_csv(std::ostream& out, const std::vector<CounterexampleRow>& rows) {
  out << "n,m,gamma2\n";
  out.precision(12);
  for (const auto& r : rows) {
    out << r.n << ',';
    if (r.kind == CounterexampleRow::Kind::pairwise_gamma2) out << r.m;
    out << ',' << r.value << '\n';
  }
}

}  // namespace vortexflow
