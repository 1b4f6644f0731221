#include "serpent/sensor.hpp"

#include <cmath>

namespace serpent {

std::string to_string(SensorTruth t) {
  return t == SensorTruth::Shape ? "x" : "xdot";
}

SensorTruth sensor_truth_from_string(const std::string& s) {
  if (s == "x") return SensorTruth::Shape;
  if (s == "xdot") return SensorTruth::ShapeVelocity;
  throw ConfigError("unknown sensor ground truth '" + s + "' (use x or xdot)");
}

double sensor_truth_value(SensorTruth truth, double x, double xdot) {
  return truth == SensorTruth::Shape ? x : xdot;
}

Eigen::VectorXd observe(const RobotState& state, double dt,
                        const SensorConfig& cfg,
                        std::vector<RngStream>& joint_streams) {
  if (!(dt > 0)) throw NumericalError("observe: dt must be positive");
  const Eigen::VectorXd x = shape_coordinates(state.q);
  const Eigen::VectorXd xdot = shape_coordinates(state.qdot);
  const int joints = static_cast<int>(x.size());
  if (static_cast<int>(joint_streams.size()) != joints)
    throw ConfigError("observe: need one noise stream per joint");

  Eigen::VectorXd dZ(joints);
  const double noise_scale = cfg.sigma_w * std::sqrt(dt);
  for (int j = 0; j < joints; ++j)
    dZ[j] = sensor_truth_value(cfg.truth, x[j], xdot[j]) * dt +
            noise_scale * joint_streams[j].normal();
  return dZ;
}

double h_approx(double theta, const Eigen::VectorXd& r_j,
                const SensorConfig& cfg) {
  return r_j.dot(cfg.basis.eval(theta));
}

Eigen::VectorXd update_sensor_weights(const Eigen::VectorXd& r_j, double dZ_j,
                                      double h_hat_j,
                                      const Eigen::VectorXd& theta_particles,
                                      double alpha_h, double dt,
                                      const SensorConfig& cfg) {
  if (!(alpha_h > 0))
    throw ConfigError("update_sensor_weights: alpha_h must be positive");
  Eigen::VectorXd phi_mean = Eigen::VectorXd::Zero(cfg.basis_size());
  Eigen::VectorXd phi(cfg.basis_size());
  for (Eigen::Index i = 0; i < theta_particles.size(); ++i) {
    cfg.basis.eval(theta_particles[i], phi);
    phi_mean += phi;
  }
  phi_mean /= static_cast<double>(theta_particles.size());
  return r_j + alpha_h * (dZ_j - h_hat_j * dt) * phi_mean;
}

}  // namespace serpent
