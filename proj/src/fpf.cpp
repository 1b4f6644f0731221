#include "serpent/fpf.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

namespace serpent {

ParticleEnsemble init_particles(int N, double delta, double omega0,
                                RngStream& rng) {
  if (N < 2) throw ConfigError("init_particles: need at least two particles");
  if (!(delta >= 0) || !(delta < omega0))
    throw ConfigError("init_particles: need 0 <= delta < omega0");
  ParticleEnsemble e;
  e.delta = delta;
  e.theta.resize(N);
  e.omega.resize(N);
  for (int i = 0; i < N; ++i) e.theta[i] = rng.uniform(0.0, two_pi<double>);
  for (int i = 0; i < N; ++i)
    e.omega[i] = rng.uniform(omega0 - delta, omega0 + delta);
  return e;
}

GainSolution galerkin_gain(const Eigen::VectorXd& theta,
                           const Eigen::VectorXd& r_j, const SensorConfig& cfg,
                           const FourierBasis& gain_basis) {
  const int N = static_cast<int>(theta.size());
  const int M = gain_basis.size();
  if (N <= M)
    throw ConfigError("galerkin_gain: need more particles than gain basis "
                      "functions");

  const int kmax =
      std::max(gain_basis.max_harmonic(), cfg.basis.max_harmonic());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(M, M);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(M);
  Eigen::VectorXd psi(M), dpsi(M), phi(cfg.basis_size());
  Eigen::VectorXd h(N);

  double s[FourierBasis::kMaxSupported], c[FourierBasis::kMaxSupported];
  for (int i = 0; i < N; ++i) {
    harmonics(theta[i], kmax, s, c);
    cfg.basis.read_values(s, c, phi);
    h[i] = r_j.dot(phi);
  }
  const double h_hat = h.mean();

  for (int i = 0; i < N; ++i) {
    harmonics(theta[i], kmax, s, c);
    gain_basis.read_values(s, c, psi);
    gain_basis.read_derivatives(s, c, dpsi);
    A.selfadjointView<Eigen::Lower>().rankUpdate(dpsi, 1.0);
    b += (h[i] - h_hat) * psi;
  }
  A = A.selfadjointView<Eigen::Lower>();
  A /= static_cast<double>(N);
  b /= static_cast<double>(N);

  GainSolution sol;
  sol.h_hat = h_hat;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A);
  const double lam_max = eig.eigenvalues().maxCoeff();
  const double lam_min = eig.eigenvalues().minCoeff();
  sol.cond = lam_min > 0.0 ? lam_max / lam_min
                           : std::numeric_limits<double>::infinity();
  if (sol.cond > 1e10) {
    sol.regularized = true;
    Eigen::MatrixXd A_reg = A;
    A_reg.diagonal().array() += 1e-8;
    sol.kappa = A_reg.ldlt().solve(b);
  } else {
    sol.kappa = A.ldlt().solve(b);
  }
  return sol;
}

double gain_at(double theta, const GainSolution& gain,
               const FourierBasis& gain_basis) {
  return gain.kappa.dot(gain_basis.eval_derivative(theta));
}

ParticleEnsemble fpf_step(const ParticleEnsemble& ensemble, double dZ_j,
                          const Eigen::VectorXd& r_j, double dt, double sigma_w,
                          const SensorConfig& cfg,
                          const FourierBasis& gain_basis) {
  const GainSolution gain = galerkin_gain(ensemble.theta, r_j, cfg, gain_basis);
  return fpf_step(ensemble, dZ_j, r_j, dt, sigma_w, cfg, gain_basis, gain);
}

ParticleEnsemble fpf_step(const ParticleEnsemble& ensemble, double dZ_j,
                          const Eigen::VectorXd& r_j, double dt, double sigma_w,
                          const SensorConfig& cfg,
                          const FourierBasis& gain_basis,
                          const GainSolution& gain) {
  if (!(dt > 0)) throw NumericalError("fpf_step: dt must be positive");
  const int N = ensemble.size();
  const int kmax =
      std::max(gain_basis.max_harmonic(), cfg.basis.max_harmonic());
  const double inv_var = 1.0 / (sigma_w * sigma_w);

  ParticleEnsemble next = ensemble;
  Eigen::VectorXd dpsi(gain_basis.size()), phi(cfg.basis_size());
  double s[FourierBasis::kMaxSupported], c[FourierBasis::kMaxSupported];
  for (int i = 0; i < N; ++i) {
    harmonics(ensemble.theta[i], kmax, s, c);
    cfg.basis.read_values(s, c, phi);
    gain_basis.read_derivatives(s, c, dpsi);
    const double h_i = r_j.dot(phi);
    const double gain_i = gain.kappa.dot(dpsi);
    const double innovation =
        dZ_j - 0.5 * (h_i + gain.h_hat) * dt;
    next.theta[i] = wrap_two_pi(ensemble.theta[i] + ensemble.omega[i] * dt +
                                gain_i * inv_var * innovation);
  }
  return next;
}

double posterior_h_mean(const ParticleEnsemble& ensemble,
                        const Eigen::VectorXd& r_j, const SensorConfig& cfg) {
  Eigen::VectorXd phi(cfg.basis_size());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < ensemble.theta.size(); ++i) {
    cfg.basis.eval(ensemble.theta[i], phi);
    acc += r_j.dot(phi);
  }
  return acc / static_cast<double>(ensemble.theta.size());
}

}  // namespace serpent
