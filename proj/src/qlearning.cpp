#include "serpent/qlearning.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "serpent/csv.hpp"

namespace serpent {

QWeights init_q_weights(const FeatureConfig& cfg, RngStream& rng) {
  QWeights weights;
  weights.n = cfg.n;
  weights.M_F = cfg.M_F();
  weights.w.resize(cfg.feature_length());
  for (int i = 0; i < cfg.group1_size() + cfg.group2_size(); ++i)
    weights.w[i] = rng.uniform(-0.1, 0.1);
  for (int i = 0; i < cfg.group3_size(); ++i)
    weights.w[cfg.group1_size() + cfg.group2_size() + i] =
        rng.uniform(0.09, 0.11);
  return weights;
}

PhaseFeatures phase_features(const std::vector<ParticleEnsemble>& ensembles,
                             const FeatureConfig& cfg) {
  if (static_cast<int>(ensembles.size()) != cfg.joints())
    throw ConfigError("phase_features: need one ensemble per joint");
  PhaseFeatures pf;
  pf.avg_phi.resize(cfg.joints(), cfg.M_F());
  Eigen::VectorXd phi(cfg.M_F());
  Eigen::VectorXd acc(cfg.M_F());
  for (int j = 0; j < cfg.joints(); ++j) {
    acc.setZero();
    const auto& theta = ensembles[j].theta;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      cfg.Phi.eval(theta[i], phi);
      acc += phi;
    }
    pf.avg_phi.row(j) = acc.transpose() / static_cast<double>(theta.size());
  }
  return pf;
}

Eigen::VectorXd features(const PhaseFeatures& pf, const ControlInput& u,
                         const FeatureConfig& cfg) {
  if (u.u.size() != cfg.n)
    throw ConfigError("features: control vector must have length n");
  const int M = cfg.M_F();
  Eigen::VectorXd f(cfg.feature_length());
  for (int j = 0; j < cfg.joints(); ++j)
    f.segment(j * M, M) = pf.avg_phi.row(j).transpose();
  const int g2 = cfg.group1_size();
  for (int j = 0; j < cfg.joints(); ++j) {
    f.segment(g2 + 2 * j * M, M) = u.u[j] * pf.avg_phi.row(j).transpose();
    f.segment(g2 + (2 * j + 1) * M, M) =
        u.u[j + 1] * pf.avg_phi.row(j).transpose();
  }
  const int g3 = g2 + cfg.group2_size();
  f.segment(g3, cfg.n) = 0.5 * u.u.array().square();
  return f;
}

Eigen::VectorXd features(const std::vector<ParticleEnsemble>& ensembles,
                         const ControlInput& u, const FeatureConfig& cfg) {
  return features(phase_features(ensembles, cfg), u, cfg);
}

double hamiltonian(const PhaseFeatures& pf, const ControlInput& u,
                   const QWeights& weights, const FeatureConfig& cfg) {
  return weights.w.dot(features(pf, u, cfg));
}

double hamiltonian(const std::vector<ParticleEnsemble>& ensembles,
                   const ControlInput& u, const QWeights& weights,
                   const FeatureConfig& cfg) {
  return hamiltonian(phase_features(ensembles, cfg), u, weights, cfg);
}

PolicyResult minimize_hamiltonian(const PhaseFeatures& pf,
                                  const QWeights& weights,
                                  const FeatureConfig& cfg) {
  constexpr double tol = 1e-6;
  const auto w3 = weights.group3();
  for (int k = 0; k < cfg.n; ++k)
    if (!(w3[k] > tol))
      throw NonConvexHamiltonianError(
          "quadratic control weight w3[" + std::to_string(k + 1) +
          "] = " + format_double(w3[k]) + " lost positivity");

  // linear coefficient of u_k: pair block k's a-side against joint k's
  // phases plus pair block k-1's b-side against joint k-1's phases, with
  // the boundary conventions b_1 = a_n = 0
  PolicyResult res;
  res.u_star.u.resize(cfg.n);
  for (int k = 0; k < cfg.n; ++k) {
    double lin = 0.0;
    if (k < cfg.joints())
      lin += weights.pair_a(k).dot(pf.avg_phi.row(k));
    if (k > 0)
      lin += weights.pair_b(k - 1).dot(pf.avg_phi.row(k - 1));
    res.u_star.u[k] = -lin / w3[k];
  }
  res.H_min = hamiltonian(pf, res.u_star, weights, cfg);
  return res;
}

PolicyResult minimize_hamiltonian(const std::vector<ParticleEnsemble>& ens,
                                  const QWeights& weights,
                                  const FeatureConfig& cfg) {
  return minimize_hamiltonian(phase_features(ens, cfg), weights, cfg);
}

double bellman_error(double H_min_next, double H_min_now, double cost_now,
                     double H_now, double gamma, double dt) {
  if (!(dt > 0)) throw NumericalError("bellman_error: dt must be positive");
  return (H_min_next - H_min_now) / dt + gamma * (cost_now - H_now);
}

QWeights update_q_weights(const QWeights& weights, double E,
                          const Eigen::VectorXd& grad, double alpha,
                          double dt) {
  if (!(alpha >= 0))
    throw ConfigError("update_q_weights: alpha must be nonnegative");
  QWeights next = weights;
  next.w -= dt * alpha * E * grad;
  return next;
}

ControlInput exploration_input(double t, double amplitude, double omega0,
                               int n) {
  ControlInput u;
  u.u.resize(n);
  const double w1 = std::numbers::sqrt2 * omega0;
  const double w2 = std::numbers::pi * omega0;
  for (int j = 1; j <= n; ++j) {
    const double phase = j * std::numbers::pi / 5.0;
    u.u[j - 1] = amplitude * std::sin(w1 * t + phase) +
                 amplitude * std::sin(w2 * t + phase);
  }
  return u;
}

double stage_cost(double psi_next, double psi_now, const ControlInput& u,
                  double epsilon, double dt) {
  if (!(dt > 0)) throw NumericalError("stage_cost: dt must be positive");
  return (psi_next - psi_now) / dt +
         u.u.squaredNorm() / (2.0 * epsilon);
}

void save_q_weights(const QWeights& weights, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  const int g1 = (weights.n - 1) * weights.M_F;
  const int g2 = 2 * g1;
  for (int i = 0; i < g1; ++i)
    out << "1," << i << ',' << format_double(weights.w[i]) << '\n';
  for (int i = 0; i < g2; ++i)
    out << "2," << i << ',' << format_double(weights.w[g1 + i]) << '\n';
  for (int i = 0; i < weights.n; ++i)
    out << "3," << i << ',' << format_double(weights.w[g1 + g2 + i]) << '\n';
}

QWeights load_q_weights(const std::string& path, const FeatureConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  QWeights weights;
  weights.n = cfg.n;
  weights.M_F = cfg.M_F();
  weights.w = Eigen::VectorXd::Zero(cfg.feature_length());
  Eigen::VectorXd seen = Eigen::VectorXd::Zero(cfg.feature_length());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string group_s, index_s, value_s;
    if (!std::getline(ss, group_s, ',') || !std::getline(ss, index_s, ',') ||
        !std::getline(ss, value_s))
      throw ConfigError("bad weight line '" + line + "'");
    const int group = std::stoi(group_s);
    const int index = std::stoi(index_s);
    const double value = std::strtod(value_s.c_str(), nullptr);
    int base = 0;
    int size = cfg.group1_size();
    if (group == 2) {
      base = cfg.group1_size();
      size = cfg.group2_size();
    } else if (group == 3) {
      base = cfg.group1_size() + cfg.group2_size();
      size = cfg.group3_size();
    } else if (group != 1) {
      throw ConfigError("bad weight group in '" + line + "'");
    }
    if (index < 0 || index >= size)
      throw ConfigError("weight index out of range in '" + line + "'");
    weights.w[base + index] = value;
    seen[base + index] = 1.0;
  }
  if (seen.sum() != cfg.feature_length())
    throw ConfigError("weight checkpoint '" + path + "' is incomplete");
  return weights;
}

}  // namespace serpent
