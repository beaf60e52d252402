#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace vortexflow {

inline constexpr const char* kVersion = "0.3.0";

/// Largest spatial dimension supported by the fixed-capacity vector types.
inline constexpr int kMaxDim = 3;

/// Stack-allocated vector of runtime length d <= kMaxDim.
using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
/// Stack-allocated d x d matrix.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;
/// A position in R^d.
using Point = Vector;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Invalid input or configuration (maps to exit status 1 in the CLI).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical breakdown: non-finite state, failed factorization, divergence (exit status 2).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

template <typename... Args>
std::string concat(Args&&... args) {
  std::ostringstream oss;
  (oss << ... << std::forward<Args>(args));
  return oss.str();
}

}  // namespace detail

inline Point make_point(std::initializer_list<double> coords) {
  Point p(static_cast<Eigen::Index>(coords.size()));
  Eigen::Index k = 0;
  for (double c : coords) p[k++] = c;
  return p;
}

inline bool all_finite(const Vector& v) {
  for (Eigen::Index k = 0; k < v.size(); ++k)
    if (!std::isfinite(v[k])) return false;
  return true;
}

/// Truncated Euclidean metric min(1, |x - y|).
inline double rho(const Point& x, const Point& y) {
  if (x.size() != y.size())
    throw ValidationError(detail::concat("rho: dimension mismatch (", x.size(), " vs ", y.size(), ")"));
  return std::min(1.0, (x - y).norm());
}

}  // namespace vortexflow
