#pragma once

#include "vortexflow/kernels.hpp"

#include <functional>
#include <string>

namespace vortexflow {

/// A C_b^2 test function with analytic gradient and Hessian.
struct TestFunction {
  std::string name;
  std::function<double(const Point&)> value;
  std::function<Vector(const Point&)> gradient;
  std::function<Matrix(const Point&)> hessian;
};

/// Smooth clip phi: identity on [-R, R], C^2, constant beyond R + w.
/// With u = (|s| - R) / w in [0, 1], phi'(s) = 1 - 3u^2 + 2u^3.
struct SmoothClip {
  double radius = 3.0;
  double width = 1.0;

  double value(double s) const {
    const double a = std::abs(s);
    if (a <= radius) return s;
    const double u = std::min((a - radius) / width, 1.0);
    const double v = radius + width * (u - u * u * u + 0.5 * u * u * u * u);
    return s < 0.0 ? -v : v;
  }
  double first(double s) const {
    const double a = std::abs(s);
    if (a <= radius) return 1.0;
    const double u = std::min((a - radius) / width, 1.0);
    return 1.0 - 3.0 * u * u + 2.0 * u * u * u;
  }
  double second(double s) const {
    const double a = std::abs(s);
    if (a <= radius || a >= radius + width) return 0.0;
    const double u = (a - radius) / width;
    const double d = (-6.0 * u + 6.0 * u * u) / width;
    return s < 0.0 ? -d : d;
  }
};

namespace test_functions {

inline TestFunction constant(double value, int dim) {
  return {"const",
          [value](const Point&) { return value; },
          [dim](const Point&) { return Vector(Vector::Zero(dim)); },
          [dim](const Point&) { return Matrix(Matrix::Zero(dim, dim)); }};
}

/// phi(x_j) with phi a smooth clip at `clip` (pass radius = inf for the raw coordinate).
inline TestFunction coordinate(int j, int dim, SmoothClip clip = {}) {
  return {"x" + std::to_string(j + 1),
          [j, clip](const Point& x) { return clip.value(x[j]); },
          [j, dim, clip](const Point& x) {
            Vector g = Vector::Zero(dim);
            g[j] = clip.first(x[j]);
            return g;
          },
          [j, dim, clip](const Point& x) {
            Matrix h = Matrix::Zero(dim, dim);
            h(j, j) = clip.second(x[j]);
            return h;
          }};
}

/// phi(x_j) phi(x_k), j != k.
inline TestFunction product(int j, int k, int dim, SmoothClip clip = {}) {
  if (j == k) throw ValidationError("test_functions::product requires distinct coordinates");
  return {"x" + std::to_string(j + 1) + "x" + std::to_string(k + 1),
          [j, k, clip](const Point& x) { return clip.value(x[j]) * clip.value(x[k]); },
          [j, k, dim, clip](const Point& x) {
            Vector g = Vector::Zero(dim);
            g[j] = clip.first(x[j]) * clip.value(x[k]);
            g[k] = clip.value(x[j]) * clip.first(x[k]);
            return g;
          },
          [j, k, dim, clip](const Point& x) {
            Matrix h = Matrix::Zero(dim, dim);
            h(j, j) = clip.second(x[j]) * clip.value(x[k]);
            h(k, k) = clip.value(x[j]) * clip.second(x[k]);
            h(j, k) = h(k, j) = clip.first(x[j]) * clip.first(x[k]);
            return h;
          }};
}

/// exp(-|x - x0|^2 / (2 w^2)).
inline TestFunction gaussian_bump(Point center, double width = 1.0) {
  const int dim = static_cast<int>(center.size());
  const double inv = 1.0 / (width * width);
  return {"bump",
          [center, inv](const Point& x) { return std::exp(-0.5 * (x - center).squaredNorm() * inv); },
          [center, inv](const Point& x) {
            const Vector d = x - center;
            return Vector(-inv * std::exp(-0.5 * d.squaredNorm() * inv) * d);
          },
          [center, inv, dim](const Point& x) {
            const Vector d = x - center;
            const double e = std::exp(-0.5 * d.squaredNorm() * inv);
            return Matrix(e * (inv * inv * d * d.transpose() - inv * Matrix::Identity(dim, dim)));
          }};
}

/// |x|^2 (unbounded; used for generator checks only).
inline TestFunction squared_norm(int dim) {
  return {"norm2",
          [](const Point& x) { return x.squaredNorm(); },
          [](const Point& x) { return Vector(2.0 * x); },
          [dim](const Point&) { return Matrix(2.0 * Matrix::Identity(dim, dim)); }};
}

}  // namespace test_functions

/// L(chi) f(x) = grad f(x) . U(x, chi) + 1/2 trace(hess f(x) G(x, x)).
template <typename Kernel>
double apply_generator(const TestFunction& f, const Point& x, const SignedParticleMeasure& chi,
                       const Kernel& kernel, const GammaConfig& cfg) {
  const Vector u = drift_u(x, chi, kernel);
  // G(x, x) = g0 I for the Gaussian family.
  return f.gradient(x).dot(u) + 0.5 * cfg.g0() * f.hessian(x).trace();
}

}  // namespace vortexflow
