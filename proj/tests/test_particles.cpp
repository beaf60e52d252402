#include "vortexflow/particles.hpp"

#include <gtest/gtest.h>

#include <boost/numeric/odeint.hpp>

#include <random>

using namespace vortexflow;

namespace {

SolverConfig deterministic(double dt, std::size_t steps, double box = 2.0) {
  return SolverConfig::make(dt, steps, BiotSavartKernel(0.1), GammaConfig{0.0, 0.5, 2}, box);
}

SignedParticleMeasure three_vortices() {
  SignedParticleMeasure nu(2);
  nu.add(make_point({0.5, 0.0}), 0.6);
  nu.add(make_point({-0.4, 0.3}), -0.3);
  nu.add(make_point({0.0, -0.6}), 0.4);
  return nu;
}

}  // namespace

TEST(Particles, SingleParticleWithoutNoiseStaysPut) {
  const auto cfg = deterministic(0.01, 50);
  SignedParticleMeasure nu(2);
  nu.add(make_point({0.3, -0.2}), 1.0);
  const NoiseStream noise(cfg.grid, cfg.dt, cfg.steps, 1, 0);
  const auto path = simulate_psi(nu, cfg, noise);
  EXPECT_EQ(path.back()[0].position, nu[0].position);
}

TEST(Particles, EqualPairCoRotatesAtFixedSeparation) {
  const auto cfg = deterministic(1e-4, 10000);
  SignedParticleMeasure nu(2);
  nu.add(make_point({1.0, 0.0}), 0.5);
  nu.add(make_point({-1.0, 0.0}), 0.5);
  const NoiseStream noise(cfg.grid, cfg.dt, cfg.steps, 1, 0);
  const auto traj = trajectory_of(simulate_psi(nu, cfg, noise));
  for (const auto& x : traj) EXPECT_NEAR((x[0] - x[1]).norm(), 2.0, 2e-6);
  // The pair turns: the midpoint stays at the origin while the atoms move.
  EXPECT_LT((traj.back()[0] + traj.back()[1]).norm(), 1e-9);
  EXPECT_GT((traj.back()[0] - traj.front()[0]).norm(), 0.01);
}

TEST(Particles, DeterministicLimitMatchesOdeSolver) {
  using State = std::vector<double>;
  const auto cfg = deterministic(1e-4, 5000);
  const auto nu = three_vortices();
  const BiotSavartKernel k(0.1);
  auto rhs = [&](const State& y, State& dy, double) {
    for (std::size_t i = 0; i < 3; ++i) {
      Vector u = Vector::Zero(2);
      for (std::size_t j = 0; j < 3; ++j)
        u += nu[j].weight * k(make_point({y[2 * i], y[2 * i + 1]}), make_point({y[2 * j], y[2 * j + 1]}));
      dy[2 * i] = u[0];
      dy[2 * i + 1] = u[1];
    }
  };
  State y;
  for (const auto& a : nu.atoms()) y.insert(y.end(), {a.position[0], a.position[1]});
  namespace ode = boost::numeric::odeint;
  ode::integrate_adaptive(ode::make_controlled(1e-12, 1e-12, ode::runge_kutta_dopri5<State>()), rhs, y, 0.0,
                          cfg.horizon(), 1e-3);
  const NoiseStream noise(cfg.grid, cfg.dt, cfg.steps, 1, 0);
  const auto end = simulate_psi(nu, cfg, noise).back();
  for (std::size_t i = 0; i < 3; ++i)
    EXPECT_LT((end[i].position - make_point({y[2 * i], y[2 * i + 1]})).norm(), 1e-4);
}

TEST(Particles, MassesAreConserved) {
  auto cfg = SolverConfig::make(1e-2, 100, BiotSavartKernel(0.1), GammaConfig{0.25, 1.0, 2}, 3.0);
  const auto nu = three_vortices();
  const NoiseStream noise(cfg.grid, cfg.dt, cfg.steps, 3, 0);
  const auto path = simulate_psi(nu, cfg, noise);
  for (const auto& st : path.states()) {
    EXPECT_EQ(st.positive_mass(), nu.positive_mass());
    EXPECT_EQ(st.negative_mass(), nu.negative_mass());
  }
}

TEST(Particles, PermutationEquivariant) {
  auto cfg = SolverConfig::make(1e-2, 100, BiotSavartKernel(0.1), GammaConfig{0.25, 1.0, 2}, 3.0);
  const auto nu = three_vortices();
  SignedParticleMeasure perm(2);
  for (std::size_t i : {2u, 0u, 1u}) perm.add(nu[i].position, nu[i].weight);
  const NoiseStream noise(cfg.grid, cfg.dt, cfg.steps, 9, 2);
  const auto a = simulate_psi(nu, cfg, noise).back();
  const auto b = simulate_psi(perm, cfg, noise).back();
  EXPECT_LT((a[2].position - b[0].position).norm(), 1e-12);
  EXPECT_LT((a[0].position - b[1].position).norm(), 1e-12);
  EXPECT_LT((a[1].position - b[2].position).norm(), 1e-12);
}

TEST(Particles, ExactModeRuns) {
  auto cfg = SolverConfig::make(1e-2, 50, BiotSavartKernel(0.1), GammaConfig{0.25, 1.0, 2}, 3.0, NoiseMode::exact);
  const NoiseStream noise(cfg.grid, cfg.dt, cfg.steps, 3, 0, NoiseMode::exact);
  const auto a = simulate_psi(three_vortices(), cfg, noise);
  const auto b = simulate_psi(three_vortices(), cfg, noise);
  EXPECT_EQ(a.back()[0].position, b.back()[0].position);
  EXPECT_NE(a.back()[0].position, three_vortices()[0].position);
}

TEST(Particles, RejectsBadInput) {
  auto cfg = deterministic(0.01, 10);
  const NoiseStream noise(cfg.grid, cfg.dt, cfg.steps, 1, 0);
  SignedParticleMeasure dup(2);
  dup.add(make_point({0, 0}), 1.0);
  dup.add(make_point({0, 0}), 1.0);
  EXPECT_THROW(simulate_psi(dup, cfg, noise), ValidationError);
  EXPECT_THROW(simulate_psi(SignedParticleMeasure(2), cfg, noise), ValidationError);
  const NoiseStream short_noise(cfg.grid, cfg.dt, 5, 1, 0);
  EXPECT_THROW(simulate_psi(three_vortices(), cfg, short_noise), ValidationError);
}

TEST(Particles, LeavingTheSheetIsNumericalError) {
  auto cfg = SolverConfig::make(1.0, 50, ZeroKernel{}, GammaConfig{50.0, 0.5, 2}, 1.0);
  const NoiseStream noise(cfg.grid, cfg.dt, cfg.steps, 1, 0);
  EXPECT_THROW(simulate_psi(three_vortices(), cfg, noise), NumericalError);
}

// Root-mean-square endpoint error against a fine reference on the same
// Brownian path; the log-log slope estimates the strong order.
TEST(Particles, StrongConvergenceOrder) {
  const GammaConfig g{0.5, 1.0, 2};
  const std::size_t fine_steps = 512;
  const double t_end = 0.5;
  const auto nu = three_vortices();
  const std::vector<std::size_t> factors{32, 16, 8, 4};
  std::vector<double> err2(factors.size(), 0.0), dts;
  const int replicas = 16;
  for (int r = 0; r < replicas; ++r) {
    const auto fine_cfg = SolverConfig::make(t_end / fine_steps, fine_steps, BiotSavartKernel(0.1), g, 2.0);
    const auto rec = NoiseRecord::from_stream(NoiseStream(fine_cfg.grid, fine_cfg.dt, fine_steps, 77, r));
    const auto ref = simulate_psi(nu, fine_cfg, rec).back();
    for (std::size_t f = 0; f < factors.size(); ++f) {
      const auto coarse = rec.coarsen(factors[f]);
      const auto cfg = SolverConfig::make(coarse.dt(), coarse.steps(), BiotSavartKernel(0.1), g, 2.0);
      const auto end = simulate_psi(nu, cfg, coarse).back();
      for (std::size_t i = 0; i < nu.size(); ++i) err2[f] += (end[i].position - ref[i].position).squaredNorm();
    }
  }
  std::vector<double> err;
  for (std::size_t f = 0; f < factors.size(); ++f) {
    dts.push_back(t_end / static_cast<double>(fine_steps / factors[f]));
    err.push_back(std::sqrt(err2[f] / replicas));
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(dts.size());
  for (std::size_t i = 0; i < dts.size(); ++i) {
    const double x = std::log(dts[i]), y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  EXPECT_GE(slope, 0.4);
  EXPECT_LE(slope, 1.1);
}

TEST(Picard, NoNoiseNoDriftConvergesImmediately) {
  auto cfg = SolverConfig::make(0.01, 20, ZeroKernel{}, GammaConfig{0.0, 1.0, 2}, 2.0);
  const NoiseStream noise(cfg.grid, cfg.dt, cfg.steps, 1, 0);
  const auto res = picard_solve(three_vortices(), cfg, noise, 10);
  ASSERT_EQ(res.successive_sup.size(), 1u);
  EXPECT_EQ(res.successive_sup[0], 0.0);
}

TEST(Picard, IteratesContractAndMatchEulerMaruyama) {
  auto cfg = SolverConfig::make(0.01, 50, BiotSavartKernel(0.1), GammaConfig{0.25, 1.0, 2}, 3.0);
  const NoiseStream noise(cfg.grid, cfg.dt, cfg.steps, 5, 1);
  const auto res = picard_solve(three_vortices(), cfg, noise, 30);
  ASSERT_GE(res.successive_sup.size(), 5u);
  EXPECT_LT(res.successive_sup[4], res.successive_sup[0]);
  const auto em = trajectory_of(simulate_psi(three_vortices(), cfg, noise));
  EXPECT_LE(sup_distance(trajectory_of(res.path), em), 5.0 * cfg.dt);
}
