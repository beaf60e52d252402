#pragma once

#include "vortexflow/config.hpp"

#include <boost/version.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace vortexflow {

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> c = {"simulate",    "fixpoint",       "residual", "continuity",
                                             "contraction", "counterexample", "disproof", "metrics"};
  return c;
}

namespace detail {

class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

  std::ofstream open(const std::string& name) {
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw ValidationError(concat("cannot write ", (dir_ / name).string()));
    f.precision(12);
    written_.push_back(name);
    return f;
  }
  const std::vector<std::string>& written() const { return written_; }
  const std::filesystem::path& path() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> written_;
};

inline void write_path_csv(std::ostream& out, const MeasurePath& path) {
  const int d = path.front().dim();
  out << "t,particle,weight";
  for (int k = 0; k < d; ++k) out << ",x" << (k + 1);
  out << '\n';
  for (std::size_t s = 0; s < path.size(); ++s)
    for (std::size_t i = 0; i < path[s].size(); ++i) {
      const auto& a = path[s][i];
      out << path.times()[s] << ',' << i << ',' << a.weight;
      for (int k = 0; k < d; ++k) out << ',' << a.position[k];
      out << '\n';
    }
}

inline void write_residual_mean(std::ostream& out, const ResidualReport& rep) {
  out << "t,mean,stderr,replicas\n";
  for (std::size_t c = 0; c < rep.times.size(); ++c)
    out << rep.times[c] << ',' << rep.mean[c].mean << ',' << rep.mean[c].stderr_mean << ',' << rep.mean[c].n << '\n';
}

inline void run(const std::string& command, const RunConfig& cfg, OutputDir& dir, std::ostream& log) {
  const SolverConfig solver = cfg.solver();
  if (command == "simulate") {
    const auto nu = cfg.initial_measure();
    NoiseStream noise(solver.grid, solver.dt, solver.steps, cfg.seed, 0, solver.noise_mode);
    const auto path = simulate_psi(nu, solver, noise);
    auto f = dir.open("path.csv");
    write_path_csv(f, path);
    log << "simulate: " << path.size() << " states, min cross-sign separation "
        << min_cross_sign_separation(path) << '\n';
  } else if (command == "fixpoint") {
    const auto rows = fixed_point_experiment(cfg.initial_measure(), solver, cfg.replicas, cfg.iters, cfg.seed);
    auto f = dir.open("fixpoint.csv");
    write_csv(f, rows);
    log << "fixpoint: final dist_psi " << rows.back().dist_psi << '\n';
  } else if (command == "residual") {
    const auto rep =
        residual_experiment(cfg.initial_measure(), cfg.test_fn(), solver, cfg.replicas, cfg.seed, cfg.checkpoints);
    auto f = dir.open("residual.csv");
    write_csv(f, rep.variance_ratio);
    auto g = dir.open("residual_mean.csv");
    write_residual_mean(g, rep);
    log << "residual: Var/QV at T = " << rep.variance_ratio.rows.back().ratio << '\n';
  } else if (command == "continuity") {
    const auto res = continuity_experiment(cfg.initial_measure(), cfg.scales, cfg.replicas, solver, cfg.seed,
                                           cfg.shared_noise);
    auto f = dir.open("continuity.csv");
    write_csv(f, res.gamma);
    auto g = dir.open("continuity_flat.csv");
    write_csv(g, res.flat);
    log << "continuity: " << res.gamma.rows.size() << " scales\n";
  } else if (command == "contraction") {
    const auto res = contraction_experiment(cfg.initial_measure(), cfg.horizons, cfg.replicas, solver, cfg.seed);
    auto f = dir.open("contraction.csv");
    write_csv(f, res.ratio);
    auto g = dir.open("contraction_bound.csv");
    write_csv(g, res.bound);
    log << "contraction: T* = " << res.t_star << '\n';
  } else if (command == "counterexample") {
    auto f = dir.open("counterexample.csv");
    write_csv(f, counterexample_table(cfg.ns));
  } else if (command == "disproof") {
    auto f = dir.open("tv.csv");
    write_csv(f, disproof_table(cfg.gaps, cfg.sigma, cfg.heat_t));
  } else if (command == "metrics") {
    const auto nu = cfg.initial_measure();
    NoiseStream noise(solver.grid, solver.dt, solver.steps, cfg.seed, 0, solver.noise_mode);
    const auto path = simulate_psi(nu, solver, noise);
    const std::size_t k = std::min(cfg.checkpoints, solver.steps);
    std::vector<MeasurePair> pairs;
    for (std::size_t c = 0; c <= k; ++c) pairs.push_back(hahn_jordan(path[c * solver.steps / k]));
    auto f = dir.open("metrics.csv");
    f << "i,j,w2\n";
    for (std::size_t i = 0; i < pairs.size(); ++i)
      for (std::size_t j = 0; j < pairs.size(); ++j) f << i << ',' << j << ',' << gamma_p(pairs[i], pairs[j], 2.0) << '\n';
  } else {
    std::string list;
    for (const auto& c : commands()) list += (list.empty() ? "" : ", ") + c;
    throw ValidationError(concat("unknown command '", command, "'; expected one of ", list));
  }
}

inline std::string versions() {
  return concat("vortexflow ", kVersion, "; eigen ", EIGEN_WORLD_VERSION, ".", EIGEN_MAJOR_VERSION, ".",
                EIGEN_MINOR_VERSION, "; boost ", BOOST_VERSION / 100000, ".", BOOST_VERSION / 100 % 1000, ".",
                BOOST_VERSION % 100);
}

inline void write_manifest(const std::filesystem::path& dir, const std::string& command, std::uint64_t seed,
                           const std::string& hash, const std::vector<std::string>& files, int status,
                           const std::string& reason) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::ofstream m(dir / "manifest.txt", std::ios::binary);
  if (!m) return;
  m << "command = " << command << "\n"
    << "seed = " << seed << "\n"
    << "config_hash = " << hash << "\n"
    << "versions = " << versions() << "\n"
    << "status = " << (status == 0 ? "ok" : "failed") << "\n"
    << "exit_code = " << status << "\n";
  if (!reason.empty()) m << "reason = " << reason << "\n";
  for (const auto& f : files) m << "output = " << f << "\n";
}

inline std::string hex64(std::uint64_t h) {
  std::ostringstream o;
  o << std::hex << std::setw(16) << std::setfill('0') << h;
  return o.str();
}

}  // namespace detail

/// Runs one command on a resolved config, writing CSVs, resolved_config.txt
/// and manifest.txt under cfg.out_dir. Returns 0, 1 (validation) or 2
/// (numerical failure).
inline int dispatch(const std::string& command, const RunConfig& cfg, std::ostream& log) {
  const std::string resolved = resolved_config_text(cfg);
  const std::string hash = detail::hex64(fnv1a(resolved));
  std::vector<std::string> files;
  int status = 0;
  std::string reason;
  try {
    detail::OutputDir dir(cfg.out_dir);
    {
      auto f = dir.open("resolved_config.txt");
      f << resolved;
    }
    try {
      detail::run(command, cfg, dir, log);
    } catch (...) {
      files = dir.written();
      throw;
    }
    files = dir.written();
  } catch (const ValidationError& e) {
    status = 1;
    reason = e.what();
  } catch (const NumericalError& e) {
    status = 2;
    reason = e.what();
  } catch (const std::filesystem::filesystem_error& e) {
    status = 1;
    reason = e.what();
  } catch (const std::exception& e) {
    status = 2;
    reason = e.what();
  }
  if (status != 0) log << "error: " << reason << '\n';
  detail::write_manifest(cfg.out_dir, command, cfg.seed, hash, files, status, reason);
  return status;
}

/// Reads the config file, applies overrides and dispatches. Config errors
/// still produce a manifest in the output directory.
inline int run_cli(const std::string& command, const std::string& config_path, std::optional<std::uint64_t> seed,
                   std::optional<std::string> out, std::ostream& log) {
  RunConfig cfg;
  try {
    std::string text;
    if (!config_path.empty()) {
      std::ifstream in(config_path, std::ios::binary);
      if (!in) throw ValidationError(detail::concat("cannot read config file '", config_path, "'"));
      std::ostringstream buf;
      buf << in.rdbuf();
      text = buf.str();
    }
    cfg = parse_config(text);
    if (seed) cfg.seed = *seed;
    if (out) {
      if (out->empty()) throw ValidationError("--out must not be empty");
      cfg.out_dir = *out;
    }
    if (std::find(commands().begin(), commands().end(), command) == commands().end()) {
      std::string list;
      for (const auto& c : commands()) list += (list.empty() ? "" : ", ") + c;
      throw ValidationError(detail::concat("unknown command '", command, "'; expected one of ", list));
    }
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    const std::string dir = out && !out->empty() ? *out : cfg.out_dir;
    detail::write_manifest(dir, command, seed.value_or(cfg.seed), "none", {}, 1, e.what());
    return 1;
  }
  return dispatch(command, cfg, log);
}

}  // namespace vortexflow
