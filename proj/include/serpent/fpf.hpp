#ifndef SERPENT_FPF_HPP
#define SERPENT_FPF_HPP

#include <Eigen/Core>

#include "serpent/fourier.hpp"
#include "serpent/rng.hpp"
#include "serpent/sensor.hpp"

namespace serpent {

// One joint's oscillator ensemble: N wrapped phases plus fixed
// heterogeneous frequencies drawn uniformly from
// [omega0 - delta, omega0 + delta].
struct ParticleEnsemble {
  Eigen::VectorXd theta;  // [rad], wrapped to [0, 2*pi)
  Eigen::VectorXd omega;  // [rad/s], fixed once drawn
  double delta = 0.0;

  int size() const { return static_cast<int>(theta.size()); }
};

// Draws N uniform phases on [0, 2*pi), then N uniform frequencies, from a
// single stream (in that order, so the draw sequence is reproducible).
ParticleEnsemble init_particles(int N, double delta, double omega0,
                                RngStream& rng);

// Fourier-Galerkin solution of the gain equation against the empirical
// ensemble: A kappa = b with
//   A_lm = (1/N) sum_i psi_l'(theta_i) psi_m'(theta_i)
//   b_l  = (1/N) sum_i (h(theta_i; r) - h_hat) psi_l(theta_i)
// and gain K(theta) = sum_l kappa_l psi_l'(theta).
struct GainSolution {
  Eigen::VectorXd kappa;
  double h_hat = 0.0;        // ensemble mean of h
  double cond = 0.0;         // condition estimate of the normal matrix
  bool regularized = false;  // ridge fallback applied
};

GainSolution galerkin_gain(const Eigen::VectorXd& theta,
                           const Eigen::VectorXd& r_j, const SensorConfig& cfg,
                           const FourierBasis& gain_basis);

double gain_at(double theta, const GainSolution& gain,
               const FourierBasis& gain_basis);

// One Stratonovich-consistent filter update for one joint:
//   theta_i <- wrap(theta_i + omega_i dt
//              + K(theta_i)/sigma_w^2 (dZ - (h(theta_i) + h_hat)/2 dt)).
// The gain is one shared Galerkin solve over the ensemble.
ParticleEnsemble fpf_step(const ParticleEnsemble& ensemble, double dZ_j,
                          const Eigen::VectorXd& r_j, double dt, double sigma_w,
                          const SensorConfig& cfg,
                          const FourierBasis& gain_basis);

// Same update with a precomputed gain solution (lets callers log gain
// diagnostics without solving twice).
ParticleEnsemble fpf_step(const ParticleEnsemble& ensemble, double dZ_j,
                          const Eigen::VectorXd& r_j, double dt, double sigma_w,
                          const SensorConfig& cfg,
                          const FourierBasis& gain_basis,
                          const GainSolution& gain);

// Particle average of f(theta).
template <class F>
double posterior_mean(const ParticleEnsemble& ensemble, F&& f) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < ensemble.theta.size(); ++i)
    acc += f(ensemble.theta[i]);
  return acc / static_cast<double>(ensemble.theta.size());
}

// Ensemble mean of h(.; r_j), the h_hat of the filter equations.
double posterior_h_mean(const ParticleEnsemble& ensemble,
                        const Eigen::VectorXd& r_j, const SensorConfig& cfg);

}  // namespace serpent

#endif  // SERPENT_FPF_HPP
