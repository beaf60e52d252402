#pragma once

#include "vortexflow/kernels.hpp"
#include "vortexflow/rng.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <array>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace vortexflow {

/// Truncation of the Wiener sheet to the box [-L, L]^d with cubic cells of
/// side h_p.
struct SheetGrid {
  int dim = 2;
  double half_width = 9.0;  ///< L
  double spacing = 0.25;    ///< h_p

  /// Positions must stay this far (in every axis) from the grid edge; the
  /// relative L^2 mass of Gamma(x, .) beyond it is below erfc(5)/2 < 1e-10.
  static double validity_margin(const GammaConfig& gamma) { return 5.0 * gamma.ell; }

  /// Default grid for a simulation box [-box, box]^d: h_p = l / 4, L = box + 6 l,
  /// with L rounded up to a whole number of cells.
  static SheetGrid for_box(int dim, double box, const GammaConfig& gamma) {
    SheetGrid g;
    g.dim = dim;
    g.spacing = gamma.ell / 4.0;
    g.half_width = std::ceil((box + 6.0 * gamma.ell) / g.spacing) * g.spacing;
    return g;
  }

  void validate() const {
    if (dim < 1 || dim > kMaxDim) throw ValidationError("sheet: dim must be in [1,3]");
    if (!(spacing > 0.0)) throw ValidationError(detail::concat("sheet.h_p must be > 0, got ", spacing));
    if (!(half_width > 0.0)) throw ValidationError(detail::concat("sheet.L must be > 0, got ", half_width));
    const double cells = 2.0 * half_width / spacing;
    if (std::abs(cells - std::round(cells)) > 1e-9 * cells)
      throw ValidationError(detail::concat("sheet: 2L/h_p must be an integer (L=", half_width, ", h_p=", spacing, ")"));
  }

  std::size_t cells_per_axis() const { return static_cast<std::size_t>(std::llround(2.0 * half_width / spacing)); }
  std::size_t num_cells() const {
    std::size_t n = 1;
    for (int k = 0; k < dim; ++k) n *= cells_per_axis();
    return n;
  }
  double cell_volume() const { return std::pow(spacing, dim); }
  double center(std::size_t i) const { return -half_width + (static_cast<double>(i) + 0.5) * spacing; }

  /// Whether x lies in the region where truncation of the sheet is negligible.
  bool valid_position(const Point& x, const GammaConfig& gamma) const {
    const double limit = half_width - validity_margin(gamma);
    for (Eigen::Index k = 0; k < x.size(); ++k)
      if (!(std::abs(x[k]) <= limit)) return false;
    return true;
  }

  /// Largest half-width of a simulation box this grid supports.
  double valid_half_width(const GammaConfig& gamma) const { return half_width - validity_margin(gamma); }

  friend bool operator==(const SheetGrid&, const SheetGrid&) = default;
};

/// Per-cell, per-component increments of the sheet over one time step,
/// each N(0, h_p^d dt). Layout is component-major: draws[l * cells + c].
/// Increments driven by the exact-covariance sampler carry no draws; their
/// seed feeds that sampler instead.
struct SheetIncrement {
  SheetGrid grid;
  std::size_t step = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> draws;

  std::span<const double> component(int l) const {
    const std::size_t cells = grid.num_cells();
    return std::span<const double>(draws).subspan(static_cast<std::size_t>(l) * cells, cells);
  }
};

/// Fills a SheetIncrement with independent N(0, h_p^d dt) draws.
inline SheetIncrement sample_increment(const SheetGrid& grid, double dt, Engine& engine) {
  if (!(dt > 0.0)) throw ValidationError("sample_increment: dt must be > 0");
  SheetIncrement inc;
  inc.grid = grid;
  inc.dt = dt;
  const std::size_t total = grid.num_cells() * static_cast<std::size_t>(grid.dim);
  inc.draws.resize(total);
  boost::random::normal_distribution<double> normal(0.0, std::sqrt(grid.cell_volume() * dt));
  for (auto& v : inc.draws) v = normal(engine);
  return inc;
}

enum class NoiseMode { grid, exact };

inline const char* to_string(NoiseMode m) { return m == NoiseMode::grid ? "grid" : "exact"; }

/// Deterministic generator of a replica's increments: step s is a pure
/// function of (master seed, replica, s).
class NoiseStream {
 public:
  NoiseStream(SheetGrid grid, double dt, std::size_t steps, std::uint64_t master_seed, std::uint64_t replica,
              NoiseMode mode = NoiseMode::grid)
      : grid_(grid), dt_(dt), steps_(steps), seed_(master_seed), replica_(replica), mode_(mode) {
    grid_.validate();
    if (!(dt > 0.0)) throw ValidationError("NoiseStream: dt must be > 0");
  }

  SheetIncrement increment(std::size_t step) const {
    const std::uint64_t s = derive_seed(seed_, {replica_, step, static_cast<std::uint64_t>(StreamPurpose::sheet)});
    SheetIncrement inc;
    if (mode_ == NoiseMode::grid) {
      Engine engine = make_engine(s);
      inc = sample_increment(grid_, dt_, engine);
    } else {
      inc.grid = grid_;
      inc.dt = dt_;
    }
    inc.step = step;
    inc.seed = s;
    return inc;
  }

  const SheetGrid& grid() const { return grid_; }
  double dt() const { return dt_; }
  std::size_t steps() const { return steps_; }
  std::uint64_t master_seed() const { return seed_; }
  std::uint64_t replica() const { return replica_; }
  NoiseMode mode() const { return mode_; }
  std::string tag() const {
    return detail::concat("seed=", seed_, ";replica=", replica_, ";L=", grid_.half_width, ";h=", grid_.spacing,
                          ";dt=", dt_, ";steps=", steps_, ";mode=", to_string(mode_));
  }

 private:
  SheetGrid grid_;
  double dt_;
  std::size_t steps_;
  std::uint64_t seed_;
  std::uint64_t replica_;
  NoiseMode mode_;
};

/// Materialized increment sequence of one run (replayable and persistable).
class NoiseRecord {
 public:
  NoiseRecord() = default;
  NoiseRecord(SheetGrid grid, double dt, std::vector<SheetIncrement> increments, std::string tag,
              NoiseMode mode = NoiseMode::grid)
      : grid_(grid), dt_(dt), increments_(std::move(increments)), tag_(std::move(tag)), mode_(mode) {}

  static NoiseRecord from_stream(const NoiseStream& stream) {
    std::vector<SheetIncrement> incs;
    incs.reserve(stream.steps());
    for (std::size_t s = 0; s < stream.steps(); ++s) incs.push_back(stream.increment(s));
    return NoiseRecord(stream.grid(), stream.dt(), std::move(incs), stream.tag(), stream.mode());
  }

  const SheetIncrement& increment(std::size_t step) const { return increments_.at(step); }
  const SheetGrid& grid() const { return grid_; }
  double dt() const { return dt_; }
  std::size_t steps() const { return increments_.size(); }
  const std::string& tag() const { return tag_; }
  NoiseMode mode() const { return mode_; }

  /// Sums groups of `factor` consecutive increments: the same sheet
  /// realization on a grid with time step factor * dt.
  NoiseRecord coarsen(std::size_t factor) const {
    if (factor == 0 || increments_.size() % factor != 0)
      throw ValidationError("NoiseRecord::coarsen: factor must divide the step count");
    if (mode_ != NoiseMode::grid) throw ValidationError("NoiseRecord::coarsen: only grid-mode records can be coarsened");
    std::vector<SheetIncrement> out;
    for (std::size_t s = 0; s < increments_.size(); s += factor) {
      SheetIncrement inc = increments_[s];
      for (std::size_t k = 1; k < factor; ++k)
        for (std::size_t i = 0; i < inc.draws.size(); ++i) inc.draws[i] += increments_[s + k].draws[i];
      inc.step = s / factor;
      inc.dt = dt_ * static_cast<double>(factor);
      out.push_back(std::move(inc));
    }
    return NoiseRecord(grid_, dt_ * static_cast<double>(factor), std::move(out),
                       detail::concat(tag_, ";coarsen=", factor), mode_);
  }

  /// Binary layout: "VFNR" magic, u32 version, u32 dim, f64 L, f64 h_p,
  /// f64 dt, u64 steps, u64 values per step, then per step u64 seed and the
  /// f64 draws.
  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("NoiseRecord::save: cannot open " + path);
    const std::uint32_t version = 1, dim = static_cast<std::uint32_t>(grid_.dim);
    const std::uint64_t steps = increments_.size();
    const std::uint64_t per_step = grid_.num_cells() * static_cast<std::uint64_t>(grid_.dim);
    out.write("VFNR", 4);
    write(out, version);
    write(out, dim);
    write(out, grid_.half_width);
    write(out, grid_.spacing);
    write(out, dt_);
    write(out, steps);
    write(out, per_step);
    for (const auto& inc : increments_) {
      if (inc.draws.size() != per_step) throw ValidationError("NoiseRecord::save: only grid-mode records can be saved");
      write(out, inc.seed);
      out.write(reinterpret_cast<const char*>(inc.draws.data()), static_cast<std::streamsize>(per_step * sizeof(double)));
    }
  }

  static NoiseRecord load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("NoiseRecord::load: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (std::memcmp(magic, "VFNR", 4) != 0) throw ValidationError("NoiseRecord::load: bad magic in " + path);
    const auto version = read<std::uint32_t>(in);
    if (version != 1) throw ValidationError("NoiseRecord::load: unsupported version");
    SheetGrid grid;
    grid.dim = static_cast<int>(read<std::uint32_t>(in));
    grid.half_width = read<double>(in);
    grid.spacing = read<double>(in);
    grid.validate();
    const double dt = read<double>(in);
    const auto steps = read<std::uint64_t>(in);
    const auto per_step = read<std::uint64_t>(in);
    if (per_step != grid.num_cells() * static_cast<std::uint64_t>(grid.dim))
      throw ValidationError("NoiseRecord::load: header/grid size mismatch");
    std::vector<SheetIncrement> incs(steps);
    for (std::uint64_t s = 0; s < steps; ++s) {
      auto& inc = incs[s];
      inc.grid = grid;
      inc.step = s;
      inc.dt = dt;
      inc.seed = read<std::uint64_t>(in);
      inc.draws.resize(per_step);
      in.read(reinterpret_cast<char*>(inc.draws.data()), static_cast<std::streamsize>(per_step * sizeof(double)));
    }
    if (!in) throw ValidationError("NoiseRecord::load: truncated file " + path);
    return NoiseRecord(grid, dt, std::move(incs), "loaded:" + path);
  }

 private:
  template <typename T>
  static void write(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  template <typename T>
  static T read(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
  }

  SheetGrid grid_;
  double dt_ = 0.0;
  std::vector<SheetIncrement> increments_;
  std::string tag_;
  NoiseMode mode_ = NoiseMode::grid;
};

/// Anything that yields the increment of a given step.
template <typename S>
concept IncrementSource = requires(const S& s, std::size_t step) {
  { s.increment(step) } -> std::convertible_to<SheetIncrement>;
  { s.steps() } -> std::convertible_to<std::size_t>;
  { s.dt() } -> std::convertible_to<double>;
  { s.grid() } -> std::convertible_to<SheetGrid>;
};

namespace detail {

// Beyond this many correlation lengths a Gamma factor is below 1e-16 of its peak.
inline constexpr double kFieldCutoff = 8.6;

struct AxisWindow {
  std::size_t lo = 0;
  std::vector<double> weights;
};

inline AxisWindow axis_window(double x, const SheetGrid& grid, const GammaConfig& gamma) {
  const double reach = kFieldCutoff * gamma.ell;
  const auto n = static_cast<std::ptrdiff_t>(grid.cells_per_axis());
  auto lo = static_cast<std::ptrdiff_t>(std::floor((x - reach + grid.half_width) / grid.spacing));
  auto hi = static_cast<std::ptrdiff_t>(std::ceil((x + reach + grid.half_width) / grid.spacing));
  lo = std::clamp<std::ptrdiff_t>(lo, 0, n);
  hi = std::clamp<std::ptrdiff_t>(hi, 0, n);
  AxisWindow w;
  w.lo = static_cast<std::size_t>(lo);
  const double inv = 1.0 / (2.0 * gamma.ell * gamma.ell);
  for (std::ptrdiff_t i = lo; i < hi; ++i) {
    const double d = x - grid.center(static_cast<std::size_t>(i));
    w.weights.push_back(std::exp(-d * d * inv));
  }
  return w;
}

}  // namespace detail

/// Riemann-sum increment of int Gamma(x, p) w(dp, dt) at a single position.
inline Vector field_noise_at(const Point& x, const SheetIncrement& inc, const GammaConfig& gamma) {
  const SheetGrid& grid = inc.grid;
  const int d = grid.dim;
  if (x.size() != d) throw ValidationError("field_noise: position dimension does not match the sheet");
  if (!grid.valid_position(x, gamma))
    throw ValidationError(detail::concat("field_noise: position outside the sheet validity region |x_k| <= ",
                                         grid.valid_half_width(gamma)));
  if (inc.draws.size() != grid.num_cells() * static_cast<std::size_t>(d))
    throw ValidationError("field_noise: increment carries no sheet draws");
  Vector out = Vector::Zero(d);
  if (gamma.c == 0.0) return out;

  std::array<detail::AxisWindow, kMaxDim> win;
  for (int k = 0; k < d; ++k) win[k] = detail::axis_window(x[k], grid, gamma);
  const std::size_t n = grid.cells_per_axis();
  const std::size_t cells = grid.num_cells();

  for (int l = 0; l < d; ++l) {
    const double* draws = inc.draws.data() + static_cast<std::size_t>(l) * cells;
    double acc = 0.0;
    if (d == 1) {
      for (std::size_t i = 0; i < win[0].weights.size(); ++i) acc += win[0].weights[i] * draws[win[0].lo + i];
    } else if (d == 2) {
      const auto& w0 = win[0];
      const auto& w1 = win[1];
      for (std::size_t i = 0; i < w0.weights.size(); ++i) {
        const double* row = draws + (w0.lo + i) * n + w1.lo;
        double inner = 0.0;
        for (std::size_t j = 0; j < w1.weights.size(); ++j) inner += w1.weights[j] * row[j];
        acc += w0.weights[i] * inner;
      }
    } else {
      const auto& w0 = win[0];
      const auto& w1 = win[1];
      const auto& w2 = win[2];
      for (std::size_t i = 0; i < w0.weights.size(); ++i)
        for (std::size_t j = 0; j < w1.weights.size(); ++j) {
          const double* row = draws + ((w0.lo + i) * n + (w1.lo + j)) * n + w2.lo;
          double inner = 0.0;
          for (std::size_t k = 0; k < w2.weights.size(); ++k) inner += w2.weights[k] * row[k];
          acc += w0.weights[i] * w1.weights[j] * inner;
        }
    }
    out[l] = gamma.c * acc;
  }
  return out;
}

/// field_noise for a list of positions; each output depends only on its
/// own position, so permuting the input permutes the output bitwise.
inline std::vector<Vector> field_noise(std::span<const Point> positions, const SheetIncrement& inc,
                                       const GammaConfig& gamma) {
  std::vector<Vector> out;
  out.reserve(positions.size());
  for (const auto& x : positions) out.push_back(field_noise_at(x, inc, gamma));
  return out;
}

/// Draws a joint Gaussian vector with covariance dt [G(x_i, x_j)] directly.
/// G = g(x_i, x_j) I has identical independent components, so one N x N
/// scalar factor serves all d components. Coincident positions share rows
/// and therefore receive identical noise.
inline std::vector<Vector> exact_cov_noise(std::span<const Point> positions, double dt, const GammaConfig& gamma,
                                           Engine& engine) {
  if (!(dt > 0.0)) throw ValidationError("exact_cov_noise: dt must be > 0");
  const std::size_t n_all = positions.size();
  const int d = gamma.dim;
  std::vector<std::size_t> slot(n_all);
  std::vector<Point> unique;
  for (std::size_t i = 0; i < n_all; ++i) {
    if (positions[i].size() != d) throw ValidationError("exact_cov_noise: dimension mismatch");
    std::size_t k = 0;
    while (k < unique.size() && unique[k] != positions[i]) ++k;
    if (k == unique.size()) unique.push_back(positions[i]);
    slot[i] = k;
  }
  const auto n = static_cast<Eigen::Index>(unique.size());
  Eigen::MatrixXd cov(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) cov(i, j) = cov(j, i) = dt * g_covariance_scalar(unique[i], unique[j], gamma);
  const double jitter = 1e-12 * dt * std::max(gamma.g0(), 1e-300);
  cov.diagonal().array() += jitter;

  boost::random::normal_distribution<double> normal;
  Eigen::MatrixXd z(n, d);
  for (int l = 0; l < d; ++l)
    for (Eigen::Index i = 0; i < n; ++i) z(i, l) = normal(engine);

  Eigen::MatrixXd sample;
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) {
    sample = llt.matrixL() * z;
  } else {
    // Near-degenerate: pivoted LDL^T, clipping roundoff-negative pivots.
    Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
    if (ldlt.info() != Eigen::Success) throw NumericalError("exact_cov_noise: covariance factorization failed");
    Eigen::VectorXd dvec = ldlt.vectorD();
    if (dvec.minCoeff() < -1e-9 * dvec.cwiseAbs().maxCoeff())
      throw NumericalError("exact_cov_noise: covariance is not positive semidefinite");
    dvec = dvec.cwiseMax(0.0).cwiseSqrt();
    Eigen::MatrixXd l = ldlt.matrixL();
    sample = ldlt.transpositionsP().transpose() * (l * (dvec.asDiagonal() * z));
  }

  std::vector<Vector> out(n_all, Vector::Zero(d));
  for (std::size_t i = 0; i < n_all; ++i)
    for (int l = 0; l < d; ++l) out[i][l] = sample(static_cast<Eigen::Index>(slot[i]), l);
  return out;
}

}  // namespace vortexflow
