#pragma once

#include "vortexflow/wiener_sheet.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace vortexflow {

/// Time discretization and physics of a particle run.
struct SolverConfig {
  double dt = 1e-3;
  std::size_t steps = 500;
  DriftKernel kernel = BiotSavartKernel(0.1);
  GammaConfig gamma{};
  SheetGrid grid{};
  NoiseMode noise_mode = NoiseMode::grid;
  double box = 3.0;  ///< half-width of the simulation box the grid must cover

  double horizon() const { return dt * static_cast<double>(steps); }

  /// Config with grid defaults derived from the box and gamma.
  static SolverConfig make(double dt, std::size_t steps, DriftKernel kernel, GammaConfig gamma, double box = 3.0,
                           NoiseMode mode = NoiseMode::grid) {
    SolverConfig c;
    c.dt = dt;
    c.steps = steps;
    c.kernel = std::move(kernel);
    c.gamma = gamma;
    c.box = box;
    c.noise_mode = mode;
    c.grid = SheetGrid::for_box(gamma.dim, box, gamma);
    c.validate();
    return c;
  }

  void validate() const {
    if (!(dt > 0.0)) throw ValidationError(detail::concat("solver.dt must be > 0, got ", dt));
    if (steps == 0) throw ValidationError("solver: step count must be >= 1");
    gamma.validate();
    grid.validate();
    if (grid.dim != gamma.dim) throw ValidationError("solver: sheet and gamma dimensions differ");
    if (std::holds_alternative<BiotSavartKernel>(kernel) && gamma.dim != 2)
      throw ValidationError("solver: the Biot-Savart kernel requires dim = 2");
    if (!(box > 0.0)) throw ValidationError("solver: box must be > 0");
    if (box > grid.valid_half_width(gamma) + 1e-12)
      throw ValidationError(detail::concat("sheet.L=", grid.half_width, " too small for box ", box,
                                           " (needs L >= box + ", SheetGrid::validity_margin(gamma), ")"));
  }
};

/// Positions r^1..r^N with weights fixed at construction.
class SystemState {
 public:
  SystemState() = default;
  explicit SystemState(const SignedParticleMeasure& nu, double t = 0.0)
      : dim_(nu.dim()), time_(t), m1_(nu.positive_mass()), m2_(nu.negative_mass()) {
    positions_.reserve(nu.size());
    weights_.reserve(nu.size());
    for (const auto& a : nu.atoms()) {
      positions_.push_back(a.position);
      weights_.push_back(a.weight);
    }
  }

  int dim() const { return dim_; }
  std::size_t size() const { return positions_.size(); }
  double time() const { return time_; }
  const std::vector<Point>& positions() const { return positions_; }
  const std::vector<double>& weights() const { return weights_; }
  double positive_mass() const { return m1_; }
  double negative_mass() const { return m2_; }

  SignedParticleMeasure measure() const { return SignedParticleMeasure::from_arrays(dim_, positions_, weights_); }

  /// Same weights and masses, new positions and time.
  SystemState moved(std::vector<Point> positions, double t) const {
    SystemState s = *this;
    s.positions_ = std::move(positions);
    s.time_ = t;
    return s;
  }

 private:
  int dim_ = 2;
  double time_ = 0.0;
  double m1_ = 0.0;
  double m2_ = 0.0;
  std::vector<Point> positions_;
  std::vector<double> weights_;
};

namespace detail {

/// U(x_i, chi) for every particle, with chi = sum_j a_j delta_{q_j}.
template <typename Kernel>
std::vector<Vector> drift_all(std::span<const Point> at, std::span<const Point> sources,
                              std::span<const double> weights, const Kernel& kernel) {
  std::vector<Vector> out;
  out.reserve(at.size());
  for (const auto& x : at) {
    Vector u = Vector::Zero(x.size());
    for (std::size_t j = 0; j < sources.size(); ++j) u += weights[j] * kernel(x, sources[j]);
    out.push_back(std::move(u));
  }
  return out;
}

inline std::vector<Vector> drift_all(std::span<const Point> at, std::span<const Point> sources,
                                     std::span<const double> weights, const DriftKernel& kernel) {
  return std::visit([&](const auto& k) { return drift_all(at, sources, weights, k); }, kernel);
}

/// Noise increments at the given positions for one step.
inline std::vector<Vector> step_noise(std::span<const Point> positions, const SheetIncrement& inc,
                                      const SolverConfig& cfg) {
  for (std::size_t i = 0; i < positions.size(); ++i)
    if (!inc.grid.valid_position(positions[i], cfg.gamma))
      throw NumericalError(detail::concat("particle ", i, " left the sheet validity region at step ", inc.step));
  if (cfg.noise_mode == NoiseMode::exact) {
    Engine engine = make_engine(derive_seed(inc.seed, {static_cast<std::uint64_t>(StreamPurpose::exact_covariance)}));
    return exact_cov_noise(positions, inc.dt, cfg.gamma, engine);
  }
  return field_noise(positions, inc, cfg.gamma);
}

template <IncrementSource Noise>
void check_noise(const Noise& noise, const SolverConfig& cfg) {
  if (noise.steps() < cfg.steps)
    throw ValidationError(detail::concat("noise has ", noise.steps(), " steps, solver needs ", cfg.steps));
  if (std::abs(noise.dt() - cfg.dt) > 1e-12 * cfg.dt) throw ValidationError("noise dt does not match solver dt");
  if (!(SheetGrid(noise.grid()) == cfg.grid)) throw ValidationError("noise grid does not match solver grid");
}

inline std::vector<double> time_grid(const SolverConfig& cfg) {
  std::vector<double> t(cfg.steps + 1);
  for (std::size_t k = 0; k <= cfg.steps; ++k) t[k] = static_cast<double>(k) * cfg.dt;
  return t;
}

}  // namespace detail

/// One Euler-Maruyama step r^i <- r^i + U(r^i, chi_t) dt + noise(r^i).
inline SystemState em_step(const SystemState& state, const SheetIncrement& inc, const SolverConfig& cfg) {
  const auto& pos = state.positions();
  const auto drift = detail::drift_all(pos, pos, state.weights(), cfg.kernel);
  const auto noise = detail::step_noise(pos, inc, cfg);
  std::vector<Point> next(pos.size());
  for (std::size_t i = 0; i < pos.size(); ++i) {
    next[i] = pos[i] + drift[i] * cfg.dt + noise[i];
    if (!all_finite(next[i]))
      throw NumericalError(detail::concat("non-finite position of particle ", i, " at step ", inc.step));
  }
  return state.moved(std::move(next), state.time() + cfg.dt);
}

namespace detail {

inline void require_canonical(const SignedParticleMeasure& nu) {
  if (nu.empty()) throw ValidationError("initial measure has no atoms");
  if (nu.canonical().size() != nu.size())
    throw ValidationError("initial measure must be canonical (no coincident or zero-weight atoms)");
}

}  // namespace detail

/// Psi(nu): the empirical-measure path of the particle system started at nu.
template <IncrementSource Noise>
MeasurePath simulate_psi(const SignedParticleMeasure& nu, const SolverConfig& cfg, const Noise& noise) {
  cfg.validate();
  detail::require_canonical(nu);
  detail::check_noise(noise, cfg);
  if (nu.dim() != cfg.gamma.dim) throw ValidationError("simulate_psi: measure dimension does not match config");

  std::vector<SignedParticleMeasure> states;
  states.reserve(cfg.steps + 1);
  SystemState state(nu);
  states.push_back(nu);
  for (std::size_t s = 0; s < cfg.steps; ++s) {
    state = em_step(state, noise.increment(s), cfg);
    states.push_back(state.measure());
  }
  return MeasurePath(detail::time_grid(cfg), std::move(states), std::string(noise.tag()));
}

/// Trajectories as positions[k][i] (time index k, particle i).
using Trajectory = std::vector<std::vector<Point>>;

inline Trajectory trajectory_of(const MeasurePath& path) {
  Trajectory out;
  out.reserve(path.size());
  for (const auto& st : path.states()) {
    std::vector<Point> p;
    p.reserve(st.size());
    for (const auto& a : st.atoms()) p.push_back(a.position);
    out.push_back(std::move(p));
  }
  return out;
}

/// Largest particle displacement between two trajectories over all times.
inline double sup_distance(const Trajectory& a, const Trajectory& b) {
  double best = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    for (std::size_t i = 0; i < a[k].size(); ++i) best = std::max(best, (a[k][i] - b[k][i]).norm());
  return best;
}

struct PicardResult {
  MeasurePath path;
  std::vector<double> successive_sup;  ///< sup distance between iterates k and k+1
};

/// Picard iteration of the integral form of the particle system on a fixed
/// discretized noise path:
///   X_{k+1}(t_s) = r(0) + sum_{u<s} [U(X_k(t_u)) dt + noise(X_k(t_u), inc_u)].
/// Starts from the constant path and stops early once two iterates coincide.
template <IncrementSource Noise>
PicardResult picard_solve(const SignedParticleMeasure& nu, const SolverConfig& cfg, const Noise& noise, int iters) {
  if (iters < 1) throw ValidationError("picard_solve: iters must be >= 1");
  cfg.validate();
  detail::require_canonical(nu);
  detail::check_noise(noise, cfg);

  const SystemState init(nu);
  const auto& weights = init.weights();
  Trajectory current(cfg.steps + 1, init.positions());
  PicardResult result;
  int increasing = 0;
  for (int k = 0; k < iters; ++k) {
    Trajectory next(cfg.steps + 1);
    next[0] = init.positions();
    for (std::size_t s = 0; s < cfg.steps; ++s) {
      const auto& x = current[s];
      const auto drift = detail::drift_all(x, x, weights, cfg.kernel);
      const auto dw = detail::step_noise(x, noise.increment(s), cfg);
      next[s + 1].resize(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) {
        next[s + 1][i] = next[s][i] + drift[i] * cfg.dt + dw[i];
        if (!all_finite(next[s + 1][i]))
          throw NumericalError(detail::concat("picard_solve: non-finite iterate at particle ", i, ", step ", s));
      }
    }
    const double dist = sup_distance(next, current);
    if (!result.successive_sup.empty() && dist > result.successive_sup.back()) {
      if (++increasing >= 3) throw NumericalError("picard_solve: iterates diverging (3 consecutive increases)");
    } else {
      increasing = 0;
    }
    result.successive_sup.push_back(dist);
    current = std::move(next);
    if (dist == 0.0) break;
  }

  std::vector<SignedParticleMeasure> states;
  states.reserve(current.size());
  for (const auto& p : current) states.push_back(SignedParticleMeasure::from_arrays(nu.dim(), p, weights));
  result.path = MeasurePath(detail::time_grid(cfg), std::move(states), std::string(noise.tag()));
  return result;
}

}  // namespace vortexflow
