#pragma once

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include <cstdint>
#include <initializer_list>

namespace vortexflow {

/// Engine used for every draw in the library. Boost's distributions are
/// specified algorithmically, so draws are identical across platforms.
using Engine = boost::random::mt19937_64;

/// Purposes keep streams derived from the same (seed, replica, step) apart.
enum class StreamPurpose : std::uint64_t {
  sheet = 1,
  exact_covariance = 2,
  perturbation = 3,
  initial_condition = 4,
  independent_control = 5,
  sampling = 6,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based seed derivation: master seed -> replica -> step -> purpose.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(master);
  for (std::uint64_t p : path) h = splitmix64(h ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

inline Engine make_engine(std::uint64_t seed) { return Engine(seed); }

}  // namespace vortexflow
