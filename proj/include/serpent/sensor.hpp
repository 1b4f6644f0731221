#ifndef SERPENT_SENSOR_HPP
#define SERPENT_SENSOR_HPP

#include <Eigen/Core>
#include <string>
#include <vector>

#include "serpent/dynamics.hpp"
#include "serpent/fourier.hpp"
#include "serpent/rng.hpp"

namespace serpent {

// Ground-truth observable of one joint, a configurable hook on
// (x_j, xdot_j).  The benchmark uses the shape angle itself.
enum class SensorTruth { Shape, ShapeVelocity };

std::string to_string(SensorTruth t);
SensorTruth sensor_truth_from_string(const std::string& s);

struct SensorConfig {
  double sigma_w = 0.1;          // noise standard deviation
  SensorTruth truth = SensorTruth::Shape;
  // cos(theta) is deliberately absent: the phase gauge would otherwise be
  // degenerate and the learner could absorb arbitrary phase shifts.
  FourierBasis basis = FourierBasis::parse("sin1,sin2,cos2");
  double learning_rate = 0.01;   // alpha_h

  int basis_size() const { return basis.size(); }
  bool operator==(const SensorConfig&) const = default;
};

// Online-learned observation-model weights, one row per joint.
struct SensorWeights {
  Eigen::MatrixXd r;  // (n-1) x M_h

  static SensorWeights zero(int joints, int basis_size) {
    return {Eigen::MatrixXd::Zero(joints, basis_size)};
  }
};

double sensor_truth_value(SensorTruth truth, double x, double xdot);

// Noisy observation increments dZ_j = h~_j(x_j, xdot_j) dt +
// sigma_w sqrt(dt) xi_j, one independent stream per joint.
Eigen::VectorXd observe(const RobotState& state, double dt,
                        const SensorConfig& cfg,
                        std::vector<RngStream>& joint_streams);

// h_j(theta; r_j) = r_j . phi_h(theta).
double h_approx(double theta, const Eigen::VectorXd& r_j,
                const SensorConfig& cfg);

// One gradient step of the online observation-model learner:
//   r_j += alpha_h [dZ_j - h_hat_j dt] (1/N) sum_i phi_h(theta_j^i).
Eigen::VectorXd update_sensor_weights(const Eigen::VectorXd& r_j, double dZ_j,
                                      double h_hat_j,
                                      const Eigen::VectorXd& theta_particles,
                                      double alpha_h, double dt,
                                      const SensorConfig& cfg);

}  // namespace serpent

#endif  // SERPENT_SENSOR_HPP
