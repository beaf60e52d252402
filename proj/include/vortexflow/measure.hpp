#pragma once

#include "vortexflow/core.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace vortexflow {

/// One weighted Dirac mass.
struct Atom {
  Point position;
  double weight = 0.0;
};

/// Finite signed measure sum_i a_i delta_{x_i} in R^d.
///
/// Atoms are kept in insertion order. Coincident atoms are allowed (particle
/// systems may pass through each other); canonical() merges them.
class SignedParticleMeasure {
 public:
  /// Atoms closer than this in every coordinate are merged by canonical().
  static constexpr double kMergeTolerance = 1e-12;

  SignedParticleMeasure() = default;
  explicit SignedParticleMeasure(int dim) : dim_(dim) { check_dim(dim); }

  SignedParticleMeasure(int dim, std::vector<Atom> atoms) : dim_(dim), atoms_(std::move(atoms)) {
    check_dim(dim);
    for (const auto& a : atoms_) validate(a);
  }

  /// Builds from parallel position/weight arrays.
  static SignedParticleMeasure from_arrays(int dim, std::span<const Point> positions,
                                           std::span<const double> weights) {
    if (positions.size() != weights.size())
      throw ValidationError("SignedParticleMeasure: positions/weights size mismatch");
    std::vector<Atom> atoms;
    atoms.reserve(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) atoms.push_back({positions[i], weights[i]});
    return SignedParticleMeasure(dim, std::move(atoms));
  }

  void add(Point position, double weight) {
    Atom a{std::move(position), weight};
    validate(a);
    atoms_.push_back(std::move(a));
  }

  int dim() const { return dim_; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }
  const std::vector<Atom>& atoms() const { return atoms_; }
  const Atom& operator[](std::size_t i) const { return atoms_[i]; }

  double positive_mass() const {
    double m = 0.0;
    for (const auto& a : atoms_) m += std::max(a.weight, 0.0);
    return m;
  }
  double negative_mass() const {
    double m = 0.0;
    for (const auto& a : atoms_) m += std::max(-a.weight, 0.0);
    return m;
  }
  double total_weight() const {
    double m = 0.0;
    for (const auto& a : atoms_) m += a.weight;
    return m;
  }
  double total_variation() const { return positive_mass() + negative_mass(); }

  /// <chi, f> for any callable f(Point) -> double.
  template <typename F>
  double integrate(F&& f) const {
    double s = 0.0;
    for (const auto& a : atoms_) s += a.weight * f(a.position);
    return s;
  }

  /// Merges atoms within kMergeTolerance (in every coordinate), sums their
  /// weights, drops atoms whose merged weight cancels, and sorts atoms
  /// lexicographically by position. Idempotent.
  SignedParticleMeasure canonical() const;

  /// Negation (all weights flipped).
  SignedParticleMeasure operator-() const {
    SignedParticleMeasure out = *this;
    for (auto& a : out.atoms_) a.weight = -a.weight;
    return out;
  }

  /// Concatenation of atom lists (no merging).
  friend SignedParticleMeasure operator+(const SignedParticleMeasure& a, const SignedParticleMeasure& b) {
    if (a.dim_ != b.dim_) throw ValidationError("measure sum: dimension mismatch");
    SignedParticleMeasure out = a;
    out.atoms_.insert(out.atoms_.end(), b.atoms_.begin(), b.atoms_.end());
    return out;
  }
  friend SignedParticleMeasure operator-(const SignedParticleMeasure& a, const SignedParticleMeasure& b) {
    return a + (-b);
  }

 private:
  static void check_dim(int dim) {
    if (dim < 1 || dim > kMaxDim)
      throw ValidationError(detail::concat("measure dimension must be in [1,", kMaxDim, "], got ", dim));
  }
  void validate(const Atom& a) const {
    if (a.position.size() != dim_)
      throw ValidationError(detail::concat("atom dimension ", a.position.size(), " != measure dimension ", dim_));
    if (!std::isfinite(a.weight) || !all_finite(a.position))
      throw ValidationError("atom with non-finite weight or coordinate");
  }

  int dim_ = 2;
  std::vector<Atom> atoms_;
};

namespace detail {

inline bool lex_less(const Point& a, const Point& b) {
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    if (a[k] < b[k]) return true;
    if (a[k] > b[k]) return false;
  }
  return false;
}

inline bool within_merge_tolerance(const Point& a, const Point& b) {
  return ((a - b).cwiseAbs().array() <= SignedParticleMeasure::kMergeTolerance).all();
}

}  // namespace detail

inline SignedParticleMeasure SignedParticleMeasure::canonical() const {
  const std::size_t n = atoms_.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Sort by first coordinate so merge candidates lie in a sliding window.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return atoms_[i].position[0] < atoms_[j].position[0];
  });

  // Union-find over near-coincident atoms.
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t a = 0; a < n; ++a) {
    const auto& pa = atoms_[order[a]].position;
    for (std::size_t b = a + 1; b < n; ++b) {
      const auto& pb = atoms_[order[b]].position;
      if (pb[0] - pa[0] > kMergeTolerance) break;
      if (detail::within_merge_tolerance(pa, pb)) {
        std::size_t ra = find(order[a]), rb = find(order[b]);
        if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
      }
    }
  }

  std::vector<double> weight(n, 0.0), scale(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find(i);
    weight[r] += atoms_[i].weight;
    scale[r] += std::abs(atoms_[i].weight);
  }
  std::vector<Atom> merged;
  for (std::size_t i = 0; i < n; ++i) {
    if (find(i) != i) continue;
    // Cancellation residue from summing opposite weights counts as zero.
    if (std::abs(weight[i]) <= 1e-14 * scale[i]) continue;
    merged.push_back({atoms_[i].position, weight[i]});
  }
  std::sort(merged.begin(), merged.end(),
            [](const Atom& a, const Atom& b) { return detail::lex_less(a.position, b.position); });
  return SignedParticleMeasure(dim_, std::move(merged));
}

/// A pair of nonnegative measures (mu^1, mu^2) in M(m1) x M(m2).
struct MeasurePair {
  SignedParticleMeasure pos;
  SignedParticleMeasure neg;
};

/// Hahn-Jordan decomposition of an atomic signed measure. The input is
/// canonicalized first, so the two parts have disjoint supports.
inline MeasurePair hahn_jordan(const SignedParticleMeasure& chi) {
  const SignedParticleMeasure c = chi.canonical();
  MeasurePair out{SignedParticleMeasure(c.dim()), SignedParticleMeasure(c.dim())};
  for (const auto& a : c.atoms()) {
    if (a.weight > 0.0)
      out.pos.add(a.position, a.weight);
    else if (a.weight < 0.0)
      out.neg.add(a.position, -a.weight);
  }
  return out;
}

/// Splits atoms by the sign of their weight without merging coincident
/// atoms. This is the (chi^1, chi^2) pair carried by a particle system; it
/// coincides with hahn_jordan whenever opposite-sign atoms never meet.
inline MeasurePair sign_split(const SignedParticleMeasure& chi) {
  MeasurePair out{SignedParticleMeasure(chi.dim()), SignedParticleMeasure(chi.dim())};
  for (const auto& a : chi.atoms()) {
    if (a.weight > 0.0)
      out.pos.add(a.position, a.weight);
    else if (a.weight < 0.0)
      out.neg.add(a.position, -a.weight);
  }
  return out;
}

/// pos - neg as a single signed measure.
inline SignedParticleMeasure recombine(const MeasurePair& pair) { return pair.pos - pair.neg; }

/// Exact equality of canonical forms (positions and weights compared with ==).
inline bool same_canonical(const SignedParticleMeasure& a, const SignedParticleMeasure& b) {
  const auto ca = a.canonical(), cb = b.canonical();
  if (ca.dim() != cb.dim() || ca.size() != cb.size()) return false;
  for (std::size_t i = 0; i < ca.size(); ++i)
    if (ca[i].weight != cb[i].weight || ca[i].position != cb[i].position) return false;
  return true;
}

/// Time-indexed sequence of signed particle measures.
class MeasurePath {
 public:
  MeasurePath() = default;
  MeasurePath(std::vector<double> times, std::vector<SignedParticleMeasure> states, std::string noise_tag)
      : times_(std::move(times)), states_(std::move(states)), noise_tag_(std::move(noise_tag)) {
    if (times_.size() != states_.size()) throw ValidationError("MeasurePath: times/states size mismatch");
    for (std::size_t k = 1; k < times_.size(); ++k)
      if (!(times_[k] > times_[k - 1])) throw ValidationError("MeasurePath: times must be strictly increasing");
    for (std::size_t k = 1; k < states_.size(); ++k) {
      const auto& a = states_[0];
      const auto& b = states_[k];
      if (a.size() != b.size()) throw ValidationError("MeasurePath: atom count changes along the path");
      for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].weight != b[i].weight) throw ValidationError("MeasurePath: weight vector changes along the path");
    }
  }

  /// Path constant in time at `state`.
  static MeasurePath constant(const SignedParticleMeasure& state, std::span<const double> times,
                              std::string tag = "constant") {
    return MeasurePath(std::vector<double>(times.begin(), times.end()),
                       std::vector<SignedParticleMeasure>(times.size(), state), std::move(tag));
  }

  std::size_t size() const { return states_.size(); }
  const std::vector<double>& times() const { return times_; }
  const std::vector<SignedParticleMeasure>& states() const { return states_; }
  const SignedParticleMeasure& operator[](std::size_t k) const { return states_[k]; }
  const SignedParticleMeasure& front() const { return states_.front(); }
  const SignedParticleMeasure& back() const { return states_.back(); }
  const std::string& noise_tag() const { return noise_tag_; }

 private:
  std::vector<double> times_;
  std::vector<SignedParticleMeasure> states_;
  std::string noise_tag_;
};

/// Smallest distance between a positive-weight and a negative-weight atom
/// over all states of the path (+inf if either sign is absent).
inline double min_cross_sign_separation(const MeasurePath& path) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& state : path.states()) {
    const auto& atoms = state.atoms();
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      if (atoms[i].weight <= 0.0) continue;
      for (std::size_t j = 0; j < atoms.size(); ++j) {
        if (atoms[j].weight >= 0.0) continue;
        best = std::min(best, (atoms[i].position - atoms[j].position).norm());
      }
    }
  }
  return best;
}

}  // namespace vortexflow
