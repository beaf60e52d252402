#pragma once

#include "vortexflow/measure.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <variant>

namespace vortexflow {

/// C^2 mollification h_eps of h(s) = ln(s) / (2 pi).
///
/// h_eps = h on [eps, inf). On [0, eps], with u = s / eps,
///   h_eps'(s) = (2u - u^3) / (2 pi eps),
/// which matches h' and h'' at s = eps, vanishes at 0, and satisfies
/// |h_eps'| <= |h'| and |h_eps''| <= |h''| (both reduce to (1 - u^2)^2 >= 0
/// and 2v - 3v^2 <= 1 with v = u^2). The dominance inequalities force
/// h_eps' = h' beyond 1/eps, so no outer flattening is applied.
class RegularizedLog {
 public:
  explicit RegularizedLog(double epsilon) : eps_(epsilon) {
    if (!(epsilon > 0.0 && epsilon <= 1.0))
      throw ValidationError(detail::concat("kernel.epsilon must lie in (0,1], got ", epsilon));
    verify_dominance();
  }

  double epsilon() const { return eps_; }

  double value(double s) const {
    if (s >= eps_) return std::log(s) / kTwoPi;
    const double u = s / eps_;
    return (std::log(eps_) + u * u - 0.25 * u * u * u * u - 0.75) / kTwoPi;
  }
  double first(double s) const {
    if (s >= eps_) return 1.0 / (kTwoPi * s);
    const double u = s / eps_;
    return (2.0 * u - u * u * u) / (kTwoPi * eps_);
  }
  double second(double s) const {
    if (s >= eps_) return -1.0 / (kTwoPi * s * s);
    const double u = s / eps_;
    return (2.0 - 3.0 * u * u) / (kTwoPi * eps_ * eps_);
  }
  /// h_eps'(s) / s, finite at s = 0.
  double first_over_s(double s) const {
    if (s >= eps_) return 1.0 / (kTwoPi * s * s);
    const double u = s / eps_;
    return (2.0 - u * u) / (kTwoPi * eps_ * eps_);
  }

  /// sup |h_eps''| (attained at s = 0).
  double sup_second() const { return 2.0 / (kTwoPi * eps_ * eps_); }
  /// sup |h_eps'(s) / s| (attained at s = 0).
  double sup_first_over_s() const { return 2.0 / (kTwoPi * eps_ * eps_); }

 private:
  void verify_dominance() const {
    constexpr int kSamples = 20000;
    constexpr double kSlack = 1e-12;
    for (int k = 1; k <= kSamples; ++k) {
      const double s = eps_ * k / kSamples;
      const double h1 = 1.0 / (kTwoPi * s), h2 = 1.0 / (kTwoPi * s * s);
      if (std::abs(first(s)) > h1 * (1.0 + kSlack) || std::abs(second(s)) > h2 * (1.0 + kSlack))
        throw NumericalError(detail::concat("RegularizedLog: derivative dominance violated at s=", s));
    }
    if (first(0.0) != 0.0) throw NumericalError("RegularizedLog: h_eps'(0) != 0");
  }

  double eps_;
};

/// Regularized 2D Biot-Savart kernel K_eps = grad-perp of h_eps(|r|).
class BiotSavartKernel {
 public:
  explicit BiotSavartKernel(double epsilon) : h_(epsilon) {}

  double epsilon() const { return h_.epsilon(); }
  const RegularizedLog& profile() const { return h_; }

  /// K_eps(r) = (-r2, r1) h_eps'(|r|) / |r|, and 0 at r = 0.
  Vector at(const Point& r) const {
    if (r.size() != 2) throw ValidationError("Biot-Savart kernel requires dim = 2");
    const double f = h_.first_over_s(r.norm());
    Vector k(2);
    k[0] = -r[1] * f;
    k[1] = r[0] * f;
    return k;
  }

  /// Two-argument form K(x, q) = K_eps(x - q).
  Vector operator()(const Point& x, const Point& q) const { return at(x - q); }

  /// Global Lipschitz bound 2 sup|h''| + sup|h'(s)/s|.
  double lipschitz_bound() const { return 2.0 * h_.sup_second() + h_.sup_first_over_s(); }

 private:
  RegularizedLog h_;
};

/// K_eps(r) as a free function.
inline Vector k_eps(const Point& r, double epsilon) { return BiotSavartKernel(epsilon).at(r); }

/// K(x, q) = 0.
struct ZeroKernel {
  int dim = 2;
  Vector operator()(const Point& x, const Point&) const { return Vector::Zero(x.size()); }
};

/// Smooth bounded Lipschitz test kernel K(x, q) = s (q - x) exp(-|x - q|^2 / (2 l^2)).
struct GaussianAttractionKernel {
  double strength = 1.0;
  double length = 1.0;
  Vector operator()(const Point& x, const Point& q) const {
    const Vector diff = q - x;
    return strength * std::exp(-diff.squaredNorm() / (2.0 * length * length)) * diff;
  }
};

/// Arbitrary user kernel K(x, q).
struct GeneralKernel {
  std::function<Vector(const Point&, const Point&)> fn;
  Vector operator()(const Point& x, const Point& q) const { return fn(x, q); }
};

using DriftKernel = std::variant<ZeroKernel, BiotSavartKernel, GaussianAttractionKernel, GeneralKernel>;

/// U(x, chi) = sum_j a_j K(x, q_j) for a concrete kernel type.
template <typename Kernel>
Vector drift_u(const Point& x, const SignedParticleMeasure& chi, const Kernel& kernel) {
  Vector u = Vector::Zero(x.size());
  for (const auto& a : chi.atoms()) u += a.weight * kernel(x, a.position);
  return u;
}

inline Vector drift_u(const Point& x, const SignedParticleMeasure& chi, const DriftKernel& kernel) {
  return std::visit([&](const auto& k) { return drift_u(x, chi, k); }, kernel);
}

/// Diagonal Gaussian diffusion kernel Gamma(x, p) = c exp(-|x - p|^2 / (2 l^2)) I.
struct GammaConfig {
  double c = 0.25;
  double ell = 1.0;
  int dim = 2;

  void validate() const {
    if (!(std::isfinite(c) && c >= 0.0)) throw ValidationError(detail::concat("gamma.c must be >= 0, got ", c));
    if (!(std::isfinite(ell) && ell > 0.0))
      throw ValidationError(detail::concat("gamma.ell must be > 0, got ", ell));
    if (dim < 1 || dim > kMaxDim) throw ValidationError(detail::concat("dim must be in [1,3], got ", dim));
  }

  /// Scalar profile of Gamma along the diagonal.
  double profile(double dist_sq) const { return c * std::exp(-dist_sq / (2.0 * ell * ell)); }

  /// G(x, x) diagonal value c^2 (pi l^2)^{d/2}.
  double g0() const { return c * c * std::pow(std::numbers::pi * ell * ell, 0.5 * dim); }
};

inline Matrix gamma_kernel(const Point& x, const Point& p, const GammaConfig& cfg) {
  if (x.size() != p.size()) throw ValidationError("gamma_kernel: dimension mismatch");
  return cfg.profile((x - p).squaredNorm()) * Matrix::Identity(x.size(), x.size());
}

/// G(x, y) = int Gamma(x, p) Gamma(y, p)^T dp = c^2 (pi l^2)^{d/2} exp(-|x - y|^2 / (4 l^2)) I.
inline double g_covariance_scalar(const Point& x, const Point& y, const GammaConfig& cfg) {
  return cfg.g0() * std::exp(-(x - y).squaredNorm() / (4.0 * cfg.ell * cfg.ell));
}

inline Matrix g_covariance(const Point& x, const Point& y, const GammaConfig& cfg) {
  if (x.size() != y.size()) throw ValidationError("g_covariance: dimension mismatch");
  return g_covariance_scalar(x, y, cfg) * Matrix::Identity(x.size(), x.size());
}

/// Left side of the Gamma regularity condition,
/// sum_{j,l} int (Gamma_jl(r,p) - Gamma_jl(q,p))^2 dp, in closed form.
inline double gamma_condition_lhs(const Point& r, const Point& q, const GammaConfig& cfg) {
  const double d2 = (r - q).squaredNorm();
  return -2.0 * cfg.dim * cfg.g0() * std::expm1(-d2 / (4.0 * cfg.ell * cfg.ell));
}

/// Analytic constant C_Gamma^2 = c^2 d (pi l^2)^{d/2} / (2 l^2).
inline double gamma_condition_constant(const GammaConfig& cfg) {
  return cfg.dim * cfg.g0() / (2.0 * cfg.ell * cfg.ell);
}

struct GammaConditionReport {
  double c_hat = 0.0;  ///< sup of lhs / |r - q|^2 over sampled pairs
  double bound = 0.0;  ///< analytic C_Gamma^2
  bool ok = false;
};

/// Samples random pairs (distances log-uniform in [1e-6 l, 10 l]) and checks
/// the sampled ratio against the analytic constant.
inline GammaConditionReport check_gamma_condition(const GammaConfig& cfg, int samples, std::uint64_t seed = 7) {
  if (samples < 1) throw ValidationError("check_gamma_condition: samples must be >= 1");
  cfg.validate();
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> logu(std::log(1e-6), std::log(10.0));
  GammaConditionReport rep;
  rep.bound = gamma_condition_constant(cfg);
  for (int s = 0; s < samples; ++s) {
    Point r(cfg.dim), dir(cfg.dim);
    for (int k = 0; k < cfg.dim; ++k) {
      r[k] = normal(gen);
      dir[k] = normal(gen);
    }
    const double len = std::exp(logu(gen)) * cfg.ell;
    const Point q = r + len * dir.normalized();
    const double d2 = (r - q).squaredNorm();
    if (d2 == 0.0) continue;
    rep.c_hat = std::max(rep.c_hat, gamma_condition_lhs(r, q, cfg) / d2);
  }
  rep.ok = rep.c_hat <= rep.bound + 1e-9;
  return rep;
}

}  // namespace vortexflow
