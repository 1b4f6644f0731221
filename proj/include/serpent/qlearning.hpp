#ifndef SERPENT_QLEARNING_HPP
#define SERPENT_QLEARNING_HPP

#include <Eigen/Core>
#include <vector>

#include "serpent/fourier.hpp"
#include "serpent/fpf.hpp"
#include "serpent/rng.hpp"

namespace serpent {

// Basis layout for the linear Hamiltonian model.  The features come in
// three groups (per joint j = 1..n-1, per link k = 1..n):
//   group 1:  Phi_m(theta_j) averaged over the ensemble
//   group 2:  u_j * avg Phi_m(theta_j)  and  u_{j+1} * avg Phi_m(theta_j)
//   group 3:  u_k^2 / 2
// Group 2 ties each link's control to the phases of its adjacent joints,
// which is what makes the extracted policy distributed.
struct FeatureConfig {
  int n = 0;  // link count
  FourierBasis Phi = FourierBasis::parse("cos1,sin1,cos2,sin2");

  int joints() const { return n - 1; }
  int M_F() const { return Phi.size(); }
  int group1_size() const { return joints() * M_F(); }
  int group2_size() const { return 2 * joints() * M_F(); }
  int group3_size() const { return n; }
  int feature_length() const {
    return group1_size() + group2_size() + group3_size();
  }
};

// Structured weight vector over the three feature groups.
struct QWeights {
  Eigen::VectorXd w;
  int n = 0;
  int M_F = 0;

  auto group1() { return w.segment(0, (n - 1) * M_F); }
  auto group1() const { return w.segment(0, (n - 1) * M_F); }
  auto group2() { return w.segment((n - 1) * M_F, 2 * (n - 1) * M_F); }
  auto group2() const { return w.segment((n - 1) * M_F, 2 * (n - 1) * M_F); }
  auto group3() { return w.segment(3 * (n - 1) * M_F, n); }
  auto group3() const { return w.segment(3 * (n - 1) * M_F, n); }

  // Weights of the u_j * Phi(theta_j) features of pair block j (0-based).
  auto pair_a(int j) const {
    return w.segment((n - 1) * M_F + 2 * j * M_F, M_F);
  }
  // Weights of the u_{j+1} * Phi(theta_j) features of pair block j.
  auto pair_b(int j) const {
    return w.segment((n - 1) * M_F + (2 * j + 1) * M_F, M_F);
  }
};

// w3 ~ Unif([0.09, 0.11]) (so the quadratic model starts convex), all
// other groups ~ Unif([-0.1, 0.1]).  Draw order: group 1, group 2, group 3.
QWeights init_q_weights(const FeatureConfig& cfg, RngStream& rng);

struct LearningConfig {
  double gamma = 0.50;    // discount rate
  double epsilon = 10.0;  // control penalty parameter
  double alpha = 0.01;    // Q learning rate
  double exploration_amplitude = 0.5;  // A
  double dt = 0.02;
  int periods_per_episode = 10;  // n_T
  int episodes = 200;            // n_e
  double policy_clamp = 0.95;    // |u*| bound at evaluation time
  int turn_sign = +1;  // +1: penalize psi increase (clockwise goal)

  bool operator==(const LearningConfig&) const = default;
};

// Ensemble-averaged basis values, avg_phi(j, m) = (1/N) sum_i
// Phi_m(theta_j^i).  Everything the learner needs per step is a function
// of this matrix and u.
struct PhaseFeatures {
  Eigen::MatrixXd avg_phi;  // (n-1) x M_F
};

PhaseFeatures phase_features(const std::vector<ParticleEnsemble>& ensembles,
                             const FeatureConfig& cfg);

// Full feature vector phi(theta^N, u) in group order.
Eigen::VectorXd features(const PhaseFeatures& pf, const ControlInput& u,
                         const FeatureConfig& cfg);
Eigen::VectorXd features(const std::vector<ParticleEnsemble>& ensembles,
                         const ControlInput& u, const FeatureConfig& cfg);

// H^(theta^N, u; w) = w . phi(theta^N, u): linear in w, quadratic in u
// with Hessian diag(w3).
double hamiltonian(const PhaseFeatures& pf, const ControlInput& u,
                   const QWeights& weights, const FeatureConfig& cfg);
double hamiltonian(const std::vector<ParticleEnsemble>& ensembles,
                   const ControlInput& u, const QWeights& weights,
                   const FeatureConfig& cfg);

struct PolicyResult {
  ControlInput u_star;
  double H_min = 0.0;
};

// Closed-form minimizer over u: u*_k = -lin_k / w3_k where lin_k collects
// the group-2 weights against avg Phi(theta_k) and avg Phi(theta_{k-1}).
// Throws NonConvexHamiltonianError if any w3_k <= 1e-6.
PolicyResult minimize_hamiltonian(const PhaseFeatures& pf,
                                  const QWeights& weights,
                                  const FeatureConfig& cfg);
PolicyResult minimize_hamiltonian(const std::vector<ParticleEnsemble>& ens,
                                  const QWeights& weights,
                                  const FeatureConfig& cfg);

// Pointwise Bellman error
//   E = (H_min_next - H_min_now)/dt + gamma (cost_now - H_now).
double bellman_error(double H_min_next, double H_min_now, double cost_now,
                     double H_now, double gamma, double dt);

// Semi-gradient step w <- w - dt * alpha * E * grad.
QWeights update_q_weights(const QWeights& weights, double E,
                          const Eigen::VectorXd& grad, double alpha, double dt);

// Exploration input u_j(t) = A sin(sqrt(2) w0 t + j pi/5)
//                          + A sin(pi w0 t + j pi/5), j = 1..n.
ControlInput exploration_input(double t, double amplitude, double omega0,
                               int n);

// One-step stage cost c = (psi_next - psi_now)/dt + 1/(2 eps) |u|^2.
double stage_cost(double psi_next, double psi_now, const ControlInput& u,
                  double epsilon, double dt);

// -- Checkpoint I/O ("group,index,value" triples) --------------------------

void save_q_weights(const QWeights& weights, const std::string& path);
QWeights load_q_weights(const std::string& path, const FeatureConfig& cfg);

}  // namespace serpent

#endif  // SERPENT_QLEARNING_HPP
