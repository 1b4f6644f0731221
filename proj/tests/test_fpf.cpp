#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>

#include "gain_oracle.hpp"
#include "serpent/fpf.hpp"

using namespace serpent;

namespace {

const FourierBasis& gain_basis() {
  static const FourierBasis b = FourierBasis::parse("sin1,cos1,sin2,cos2");
  return b;
}

Eigen::VectorXd uniform_grid(int N) {
  Eigen::VectorXd theta(N);
  for (int i = 0; i < N; ++i) theta[i] = two_pi<double> * (i + 0.5) / N;
  return theta;
}

}  // namespace

TEST_CASE("particle initialization") {
  SUBCASE("zero heterogeneity pins every frequency to omega0") {
    RngStream rng(5);
    const ParticleEnsemble e = init_particles(50, 0.0, 1.0, rng);
    CHECK((e.omega.array() - 1.0).abs().maxCoeff() == 0.0);
  }
  SUBCASE("phases are uniform on the circle") {
    RngStream rng(6);
    const ParticleEnsemble e = init_particles(100000, 0.05, 1.0, rng);
    std::complex<double> z(0, 0);
    for (int i = 0; i < e.size(); ++i) z += std::polar(1.0, e.theta[i]);
    CHECK(std::abs(z) / e.size() < 0.02);
    CHECK(e.theta.minCoeff() >= 0.0);
    CHECK(e.theta.maxCoeff() < two_pi<double>);
    CHECK(e.omega.minCoeff() >= 0.95);
    CHECK(e.omega.maxCoeff() <= 1.05);
  }
  SUBCASE("fixed seeds reproduce the ensemble") {
    RngStream a(7), b(7);
    const ParticleEnsemble ea = init_particles(100, 0.05, 1.0, a);
    const ParticleEnsemble eb = init_particles(100, 0.05, 1.0, b);
    CHECK((ea.theta - eb.theta).cwiseAbs().maxCoeff() == 0.0);
    CHECK((ea.omega - eb.omega).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("Galerkin gain solves the circular Poisson equation analytically") {
  // rho uniform, h = sin(theta): phi'' = -sin gives gain phi' = cos(theta)
  SensorConfig cfg;
  Eigen::VectorXd r(3);
  r << 1.0, 0.0, 0.0;
  const FourierBasis basis2 = FourierBasis::parse("sin1,cos1");
  const GainSolution sol =
      galerkin_gain(uniform_grid(2048), r, cfg, basis2);
  CHECK(sol.kappa[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(sol.kappa[1]) < 1e-9);
  for (double theta : {0.0, 0.7, 2.0, 4.4})
    CHECK(gain_at(theta, sol, basis2) ==
          doctest::Approx(std::cos(theta)).epsilon(1e-9));
}

TEST_CASE("constant observation function produces zero gain") {
  SensorConfig cfg;
  const Eigen::VectorXd r = Eigen::VectorXd::Zero(3);
  const GainSolution sol = galerkin_gain(uniform_grid(512), r, cfg, gain_basis());
  CHECK(sol.kappa.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("Galerkin gain tracks the dense grid solve on smooth ensembles") {
  // ensembles drawn as quantiles of random von Mises mixtures,
  // observation functions random in the sensor basis, gain basis with
  // harmonics up to order 4, and the grid equation weighted by a
  // von Mises kernel density of the particles
  const std::vector<double> errors = oracle::galerkin_vs_grid_errors(20, 99);
  for (double rel : errors) CHECK(rel < 0.05);
}

TEST_CASE("zero gain reduces the filter to free oscillators") {
  SensorConfig cfg;
  RngStream rng(11);
  const ParticleEnsemble e = init_particles(64, 0.05, 1.0, rng);
  const Eigen::VectorXd r = Eigen::VectorXd::Zero(3);
  const ParticleEnsemble next =
      fpf_step(e, 0.013, r, 0.02, cfg.sigma_w, cfg, gain_basis());
  for (int i = 0; i < e.size(); ++i)
    CHECK(next.theta[i] ==
          doctest::Approx(wrap_two_pi(e.theta[i] + e.omega[i] * 0.02))
              .epsilon(1e-14));
}

TEST_CASE("filter update matches the discrete update line symbol for symbol") {
  SensorConfig cfg;
  Eigen::VectorXd r(3);
  r << 0.8, -0.2, 0.4;
  ParticleEnsemble e;
  e.theta.resize(5);
  e.theta << 0.4, 2.9, 5.5, 1.8, 3.7;
  e.omega.resize(5);
  e.omega << 0.97, 1.0, 1.02, 0.99, 1.01;
  e.delta = 0.05;
  const double dZ = -0.007, dt = 0.02, sigma = 0.1;

  const GainSolution gain = galerkin_gain(e.theta, r, cfg, gain_basis());
  const ParticleEnsemble next =
      fpf_step(e, dZ, r, dt, sigma, cfg, gain_basis(), gain);

  auto h = [&](double th) {
    return r[0] * std::sin(th) + r[1] * std::sin(2 * th) +
           r[2] * std::cos(2 * th);
  };
  double h_hat = 0.0;
  for (int i = 0; i < 5; ++i) h_hat += h(e.theta[i]) / 5.0;
  for (int i = 0; i < 5; ++i) {
    const double K =
        gain.kappa[0] * std::cos(e.theta[i]) -
        gain.kappa[1] * std::sin(e.theta[i]) +
        gain.kappa[2] * 2.0 * std::cos(2 * e.theta[i]) -
        gain.kappa[3] * 2.0 * std::sin(2 * e.theta[i]);
    const double expected = wrap_two_pi(
        e.theta[i] + e.omega[i] * dt +
        (K / (sigma * sigma)) * (dZ - 0.5 * (h(e.theta[i]) + h_hat) * dt));
    CHECK(next.theta[i] == doctest::Approx(expected).epsilon(1e-14));
  }
}

TEST_CASE("ensemble locks onto a noiseless phase trajectory") {
  SensorConfig cfg;
  Eigen::VectorXd r_true(3);
  r_true << 1.0, 0.3, 0.2;
  const double dt = 0.02, omega0 = 1.0;
  RngStream rng(derive_seed(7, "particles", 0));
  ParticleEnsemble ens = init_particles(100, 0.05, omega0, rng);
  double theta_true = 1.0;
  const int steps = 5 * 314;
  for (int k = 0; k < steps; ++k) {
    const double dZ = h_approx(theta_true, r_true, cfg) * dt;
    ens = fpf_step(ens, dZ, r_true, dt, cfg.sigma_w, cfg, gain_basis());
    theta_true = wrap_two_pi(theta_true + omega0 * dt);
  }
  CHECK(std::abs(wrap_pi(circular_mean(ens.theta) - theta_true)) < 0.15);
  CHECK(circular_resultant(ens.theta) > 0.9);
}

TEST_CASE("identical inputs give bit-identical filter trajectories") {
  // the update reads nothing but (ensemble, dZ, r); running the same
  // joint next to arbitrary other joints cannot change it
  SensorConfig cfg;
  Eigen::VectorXd r(3);
  r << 0.5, 0.1, -0.3;
  RngStream a(derive_seed(3, "particles", 1));
  RngStream b(derive_seed(3, "particles", 1));
  ParticleEnsemble ea = init_particles(50, 0.05, 1.0, a);
  ParticleEnsemble eb = init_particles(50, 0.05, 1.0, b);

  RngStream other(derive_seed(3, "particles", 2));
  ParticleEnsemble decoy = init_particles(50, 0.05, 1.0, other);

  for (int k = 0; k < 200; ++k) {
    const double dZ = 0.01 * std::sin(0.37 * k);
    ea = fpf_step(ea, dZ, r, 0.02, cfg.sigma_w, cfg, gain_basis());
    decoy = fpf_step(decoy, -dZ, r, 0.02, cfg.sigma_w, cfg, gain_basis());
    eb = fpf_step(eb, dZ, r, 0.02, cfg.sigma_w, cfg, gain_basis());
    REQUIRE((ea.theta - eb.theta).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("consensus matching the observation switches the gain off") {
  SensorConfig cfg;
  Eigen::VectorXd r(3);
  r << 0.9, 0.2, -0.1;
  const Eigen::VectorXd theta = Eigen::VectorXd::Constant(32, 2.2);
  const GainSolution sol = galerkin_gain(theta, r, cfg, gain_basis());
  CHECK(sol.regularized);  // rank-1 normal matrix
  CHECK(sol.kappa.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("ill-conditioned ensembles fall back to the ridge solve") {
  SensorConfig cfg;
  Eigen::VectorXd r(3);
  r << 1.0, 0.0, 0.0;
  // two clusters: rank-2 normal matrix with a nonzero right-hand side
  Eigen::VectorXd theta(32);
  for (int i = 0; i < 32; ++i) theta[i] = i < 16 ? 0.9 : 2.7;
  const GainSolution sol = galerkin_gain(theta, r, cfg, gain_basis());
  CHECK(sol.regularized);
  CHECK(sol.cond > 1e10);
  CHECK(sol.kappa.allFinite());
  CHECK(sol.kappa.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("wrapping does not move the circular mean") {
  RngStream rng(17);
  Eigen::VectorXd raw(200), wrapped(200);
  for (int i = 0; i < 200; ++i) {
    raw[i] = rng.uniform(-30.0, 30.0);
    wrapped[i] = wrap_two_pi(raw[i]);
  }
  CHECK(std::abs(wrap_pi(circular_mean(raw) - circular_mean(wrapped))) < 1e-12);
}

TEST_CASE("posterior means") {
  SensorConfig cfg;
  RngStream rng(23);
  const ParticleEnsemble e = init_particles(500, 0.05, 1.0, rng);

  CHECK(posterior_mean(e, [](double) { return 1.0; }) == 1.0);

  ParticleEnsemble sync = e;
  sync.theta.setConstant(1.7);
  std::complex<double> z(0, 0);
  for (int i = 0; i < sync.size(); ++i) z += std::polar(1.0, sync.theta[i]);
  z /= static_cast<double>(sync.size());
  CHECK(std::abs(z) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::arg(z) == doctest::Approx(1.7).epsilon(1e-12));

  // shared definition with the sensor-weight update direction
  Eigen::VectorXd r(3);
  r << 0.4, 0.3, 0.2;
  const double via_posterior = posterior_mean(
      e, [&](double th) { return h_approx(th, r, cfg); });
  CHECK(posterior_h_mean(e, r, cfg) ==
        doctest::Approx(via_posterior).epsilon(1e-12));
}
