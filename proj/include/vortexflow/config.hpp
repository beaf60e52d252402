#pragma once

#include "vortexflow/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace vortexflow {

/// Fully resolved run configuration. Every field maps to one config key.
struct RunConfig {
  int dim = 2;
  std::uint64_t seed = 12345;

  std::string kernel_type = "biot_savart";
  double kernel_epsilon = 0.1;
  double kernel_strength = 1.0;
  double kernel_length = 1.0;

  GammaConfig gamma{};

  std::optional<double> sheet_L;
  std::optional<double> sheet_h_p;

  double dt = 1e-3;
  double horizon = 0.5;
  NoiseMode noise_mode = NoiseMode::grid;
  double box = 3.0;

  int n = 8;
  std::string init = "ring";
  double radius = 1.0;
  double m1 = 1.0;
  double m2 = 0.5;

  std::size_t replicas = 64;
  std::vector<double> scales{0.1, 0.01, 0.001};
  std::vector<double> horizons{0.05, 0.1, 0.2, 0.4};
  int iters = 10;
  std::vector<int> ns{2, 4, 8};
  std::vector<double> gaps{0.25, 0.5, 1.0, 2.0, 4.0};
  double sigma = 1.0;
  double heat_t = 1.0;
  std::string test_function = "x1";
  std::size_t checkpoints = 10;
  bool shared_noise = true;
  double clip = 3.0;

  std::string out_dir = "out";

  std::size_t steps() const { return static_cast<std::size_t>(std::llround(horizon / dt)); }

  DriftKernel kernel() const {
    if (kernel_type == "biot_savart") return BiotSavartKernel(kernel_epsilon);
    if (kernel_type == "zero") return ZeroKernel{};
    return GaussianAttractionKernel{kernel_strength, kernel_length};
  }

  SheetGrid grid() const {
    GammaConfig g = gamma;
    g.dim = dim;
    SheetGrid grid = SheetGrid::for_box(dim, box, g);
    if (sheet_h_p) grid.spacing = *sheet_h_p;
    if (sheet_L) {
      grid.half_width = *sheet_L;
    } else if (sheet_h_p) {
      grid.half_width = std::ceil((box + 6.0 * gamma.ell) / grid.spacing) * grid.spacing;
    }
    return grid;
  }

  SolverConfig solver() const {
    SolverConfig s;
    s.dt = dt;
    s.steps = steps();
    s.kernel = kernel();
    s.gamma = gamma;
    s.gamma.dim = dim;
    s.grid = grid();
    s.noise_mode = noise_mode;
    s.box = box;
    s.validate();
    return s;
  }

  SignedParticleMeasure initial_measure() const {
    SignedParticleMeasure mu = init == "ring" ? ring_measure(n, radius, m1, m2, dim)
                                              : random_measure(n, radius, m1, m2, dim, seed);
    for (const auto& a : mu.atoms())
      for (int k = 0; k < dim; ++k)
        if (std::abs(a.position[k]) > box)
          throw ValidationError(detail::concat("particles.radius=", radius, " places atoms outside solver.box=", box));
    return mu;
  }

  TestFunction test_fn() const {
    const SmoothClip c{clip, 1.0};
    if (test_function == "x1") return test_functions::coordinate(0, dim, c);
    if (test_function == "x1x2") return test_functions::product(0, 1, dim, c);
    return test_functions::gaussian_bump(Point::Zero(dim), 1.0);
  }
};

namespace detail {

struct KeySpec {
  const char* key;
  const char* help;
};

inline const std::vector<KeySpec>& config_keys() {
  static const std::vector<KeySpec> keys = {
      {"dim", "spatial dimension d in [1,3]"},
      {"seed", "master seed (unsigned 64-bit)"},
      {"kernel.type", "biot_savart | zero | gaussian_attraction"},
      {"kernel.epsilon", "Biot-Savart regularization radius in (0,1]"},
      {"kernel.strength", "gaussian_attraction strength"},
      {"kernel.length", "gaussian_attraction length > 0"},
      {"gamma.c", "noise amplitude >= 0"},
      {"gamma.ell", "noise correlation length > 0"},
      {"sheet.L", "sheet half-width (default box + 6 ell)"},
      {"sheet.h_p", "sheet cell spacing (default ell / 4)"},
      {"solver.dt", "time step > 0"},
      {"solver.T", "horizon, a multiple of solver.dt"},
      {"solver.noise_mode", "grid | exact"},
      {"solver.box", "half-width of the simulation box"},
      {"particles.n", "atom count >= 1"},
      {"particles.init", "ring | random"},
      {"particles.radius", "ring radius or disk radius"},
      {"particles.m1", "positive mass > 0"},
      {"particles.m2", "negative mass >= 0"},
      {"experiment.replicas", "Monte Carlo replicas >= 2"},
      {"experiment.scales", "perturbation sizes, decreasing"},
      {"experiment.horizons", "contraction horizons, increasing"},
      {"experiment.iters", "fixed-point iterations >= 2"},
      {"experiment.ns", "counterexample indices >= 1"},
      {"experiment.gaps", "disproof gaps |a - b| >= 0"},
      {"experiment.sigma", "disproof diffusion coefficient > 0"},
      {"experiment.t", "disproof time > 0"},
      {"experiment.test_function", "x1 | x1x2 | bump"},
      {"experiment.checkpoints", "residual checkpoints >= 1"},
      {"experiment.shared_noise", "true | false (continuity coupling)"},
      {"experiment.clip", "clip radius for coordinate test functions > 0"},
      {"output.dir", "output directory"},
  };
  return keys;
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string valid_key_list() {
  std::string out;
  for (const auto& k : config_keys()) {
    if (!out.empty()) out += ", ";
    out += k.key;
  }
  return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, x);
  if (r.ec != std::errc() || r.ptr != end || !std::isfinite(x))
    throw ValidationError(concat(key, ": expected a real number, got '", v, "'"));
  return x;
}

inline long long parse_int(const std::string& key, const std::string& v) {
  long long x = 0;
  const auto* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, x);
  if (r.ec != std::errc() || r.ptr != end) throw ValidationError(concat(key, ": expected an integer, got '", v, "'"));
  return x;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  const auto* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, x);
  if (r.ec != std::errc() || r.ptr != end)
    throw ValidationError(concat(key, ": expected an unsigned integer, got '", v, "'"));
  return x;
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::string choice(const std::string& key, const std::string& v, std::initializer_list<const char*> allowed) {
  std::string opts;
  for (const char* a : allowed) {
    if (v == a) return v;
    if (!opts.empty()) opts += " | ";
    opts += a;
  }
  throw ValidationError(concat(key, ": expected one of ", opts, ", got '", v, "'"));
}

inline std::string join(const std::vector<double>& xs) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t i = 0; i < xs.size(); ++i) out << (i ? ", " : "") << xs[i];
  return out.str();
}

}  // namespace detail

/// Parses `key = value` lines. `[section]` headers prefix following keys
/// with `section.`; `#` starts a comment. Lists are comma separated.
inline RunConfig parse_config(std::string_view text) {
  std::map<std::string, std::string> raw;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ValidationError(detail::concat("line ", lineno, ": malformed section header"));
      section = detail::trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError(detail::concat("line ", lineno, ": expected key = value"));
    std::string key = detail::trim(std::string_view(line).substr(0, eq));
    const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
    if (!section.empty()) key = section + "." + key;
    const auto& keys = detail::config_keys();
    if (std::none_of(keys.begin(), keys.end(), [&](const auto& k) { return key == k.key; }))
      throw ValidationError(detail::concat("unknown key '", key, "'; valid keys: ", detail::valid_key_list()));
    if (raw.count(key)) throw ValidationError(detail::concat(key, ": given more than once"));
    if (value.empty()) throw ValidationError(detail::concat(key, ": missing value"));
    raw[key] = value;
  }

  RunConfig c;
  auto has = [&](const char* k) { return raw.count(k) > 0; };
  auto real = [&](const char* k, double& dst) {
    if (has(k)) dst = detail::parse_double(k, raw[k]);
  };
  auto reals = [&](const char* k, std::vector<double>& dst) {
    if (!has(k)) return;
    dst.clear();
    for (const auto& item : detail::split_list(raw[k])) dst.push_back(detail::parse_double(k, item));
    if (dst.empty()) throw ValidationError(detail::concat(k, ": list must not be empty"));
  };

  if (has("dim")) c.dim = static_cast<int>(detail::parse_int("dim", raw["dim"]));
  if (has("seed")) c.seed = detail::parse_u64("seed", raw["seed"]);
  if (has("kernel.type"))
    c.kernel_type = detail::choice("kernel.type", raw["kernel.type"], {"biot_savart", "zero", "gaussian_attraction"});
  real("kernel.epsilon", c.kernel_epsilon);
  real("kernel.strength", c.kernel_strength);
  real("kernel.length", c.kernel_length);
  real("gamma.c", c.gamma.c);
  real("gamma.ell", c.gamma.ell);
  if (has("sheet.L")) c.sheet_L = detail::parse_double("sheet.L", raw["sheet.L"]);
  if (has("sheet.h_p")) c.sheet_h_p = detail::parse_double("sheet.h_p", raw["sheet.h_p"]);
  real("solver.dt", c.dt);
  real("solver.T", c.horizon);
  if (has("solver.noise_mode"))
    c.noise_mode = detail::choice("solver.noise_mode", raw["solver.noise_mode"], {"grid", "exact"}) == "grid"
                       ? NoiseMode::grid
                       : NoiseMode::exact;
  real("solver.box", c.box);
  if (has("particles.n")) c.n = static_cast<int>(detail::parse_int("particles.n", raw["particles.n"]));
  if (has("particles.init")) c.init = detail::choice("particles.init", raw["particles.init"], {"ring", "random"});
  real("particles.radius", c.radius);
  real("particles.m1", c.m1);
  real("particles.m2", c.m2);
  if (has("experiment.replicas")) {
    const auto r = detail::parse_int("experiment.replicas", raw["experiment.replicas"]);
    if (r < 2) throw ValidationError("experiment.replicas must be >= 2");
    c.replicas = static_cast<std::size_t>(r);
  }
  reals("experiment.scales", c.scales);
  reals("experiment.horizons", c.horizons);
  if (has("experiment.iters")) c.iters = static_cast<int>(detail::parse_int("experiment.iters", raw["experiment.iters"]));
  if (has("experiment.ns")) {
    c.ns.clear();
    for (const auto& item : detail::split_list(raw["experiment.ns"]))
      c.ns.push_back(static_cast<int>(detail::parse_int("experiment.ns", item)));
    if (c.ns.empty()) throw ValidationError("experiment.ns: list must not be empty");
  }
  reals("experiment.gaps", c.gaps);
  real("experiment.sigma", c.sigma);
  real("experiment.t", c.heat_t);
  if (has("experiment.test_function"))
    c.test_function = detail::choice("experiment.test_function", raw["experiment.test_function"], {"x1", "x1x2", "bump"});
  if (has("experiment.checkpoints")) {
    const auto k = detail::parse_int("experiment.checkpoints", raw["experiment.checkpoints"]);
    if (k < 1) throw ValidationError("experiment.checkpoints must be >= 1");
    c.checkpoints = static_cast<std::size_t>(k);
  }
  if (has("experiment.shared_noise"))
    c.shared_noise = detail::choice("experiment.shared_noise", raw["experiment.shared_noise"], {"true", "false"}) == "true";
  real("experiment.clip", c.clip);
  if (has("output.dir")) c.out_dir = raw["output.dir"];

  // Constraint checks, each naming its key.
  if (c.dim < 1 || c.dim > kMaxDim) throw ValidationError(detail::concat("dim must be in [1,3], got ", c.dim));
  if (!(c.kernel_epsilon > 0.0 && c.kernel_epsilon <= 1.0))
    throw ValidationError(detail::concat("kernel.epsilon must lie in (0,1], got ", c.kernel_epsilon));
  if (c.kernel_type == "biot_savart" && c.dim != 2)
    throw ValidationError("kernel.type = biot_savart requires dim = 2");
  if (!(c.kernel_length > 0.0)) throw ValidationError("kernel.length must be > 0");
  if (!(c.gamma.c >= 0.0)) throw ValidationError(detail::concat("gamma.c must be >= 0, got ", c.gamma.c));
  if (!(c.gamma.ell > 0.0)) throw ValidationError(detail::concat("gamma.ell must be > 0, got ", c.gamma.ell));
  c.gamma.dim = c.dim;
  if (c.sheet_L && !(*c.sheet_L > 0.0)) throw ValidationError("sheet.L must be > 0");
  if (c.sheet_h_p && !(*c.sheet_h_p > 0.0)) throw ValidationError("sheet.h_p must be > 0");
  if (!(c.dt > 0.0)) throw ValidationError(detail::concat("solver.dt must be > 0, got ", c.dt));
  if (!(c.horizon > 0.0)) throw ValidationError(detail::concat("solver.T must be > 0, got ", c.horizon));
  if (std::abs(static_cast<double>(c.steps()) * c.dt - c.horizon) > 1e-9 * c.horizon || c.steps() == 0)
    throw ValidationError(detail::concat("solver.T=", c.horizon, " is not a multiple of solver.dt=", c.dt));
  if (!(c.box > 0.0)) throw ValidationError("solver.box must be > 0");
  if (c.n < 1) throw ValidationError("particles.n must be >= 1");
  if (!(c.radius > 0.0)) throw ValidationError("particles.radius must be > 0");
  if (!(c.m1 > 0.0)) throw ValidationError("particles.m1 must be > 0");
  if (!(c.m2 >= 0.0)) throw ValidationError("particles.m2 must be >= 0");
  for (std::size_t i = 0; i < c.horizons.size(); ++i)
    if (!(c.horizons[i] > 0.0) || (i > 0 && !(c.horizons[i] > c.horizons[i - 1])))
      throw ValidationError("experiment.horizons must be positive and increasing");
  if (c.iters < 2) throw ValidationError("experiment.iters must be >= 2");
  for (int n : c.ns)
    if (n < 1) throw ValidationError("experiment.ns entries must be >= 1");
  if (!(c.sigma > 0.0)) throw ValidationError("experiment.sigma must be > 0");
  if (!(c.heat_t > 0.0)) throw ValidationError("experiment.t must be > 0");
  if (!(c.clip > 0.0)) throw ValidationError("experiment.clip must be > 0");
  if (c.test_function == "x1x2" && c.dim < 2) throw ValidationError("experiment.test_function = x1x2 requires dim >= 2");
  if (c.out_dir.empty()) throw ValidationError("output.dir must not be empty");
  try {
    (void)c.solver();
  } catch (const ValidationError& e) {
    throw ValidationError(detail::concat("sheet/solver: ", e.what()));
  }
  return c;
}

/// Every key with its resolved value, in schema order.
inline std::string resolved_config_text(const RunConfig& c) {
  const SheetGrid g = c.grid();
  std::ostringstream o;
  o.precision(17);
  o << "dim = " << c.dim << "\n"
    << "seed = " << c.seed << "\n"
    << "kernel.type = " << c.kernel_type << "\n"
    << "kernel.epsilon = " << c.kernel_epsilon << "\n"
    << "kernel.strength = " << c.kernel_strength << "\n"
    << "kernel.length = " << c.kernel_length << "\n"
    << "gamma.c = " << c.gamma.c << "\n"
    << "gamma.ell = " << c.gamma.ell << "\n"
    << "sheet.L = " << g.half_width << "\n"
    << "sheet.h_p = " << g.spacing << "\n"
    << "solver.dt = " << c.dt << "\n"
    << "solver.T = " << c.horizon << "\n"
    << "solver.noise_mode = " << to_string(c.noise_mode) << "\n"
    << "solver.box = " << c.box << "\n"
    << "particles.n = " << c.n << "\n"
    << "particles.init = " << c.init << "\n"
    << "particles.radius = " << c.radius << "\n"
    << "particles.m1 = " << c.m1 << "\n"
    << "particles.m2 = " << c.m2 << "\n"
    << "experiment.replicas = " << c.replicas << "\n"
    << "experiment.scales = " << detail::join(c.scales) << "\n"
    << "experiment.horizons = " << detail::join(c.horizons) << "\n"
    << "experiment.iters = " << c.iters << "\n"
    << "experiment.ns = ";
  for (std::size_t i = 0; i < c.ns.size(); ++i) o << (i ? ", " : "") << c.ns[i];
  o << "\n"
    << "experiment.gaps = " << detail::join(c.gaps) << "\n"
    << "experiment.sigma = " << c.sigma << "\n"
    << "experiment.t = " << c.heat_t << "\n"
    << "experiment.test_function = " << c.test_function << "\n"
    << "experiment.checkpoints = " << c.checkpoints << "\n"
    << "experiment.shared_noise = " << (c.shared_noise ? "true" : "false") << "\n"
    << "experiment.clip = " << c.clip << "\n"
    << "output.dir = " << c.out_dir << "\n";
  return o.str();
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace vortexflow
