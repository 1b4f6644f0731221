#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "serpent/sensor.hpp"

using namespace serpent;

namespace {

RobotState state_with_shape(const Eigen::VectorXd& x,
                            const Eigen::VectorXd& xdot) {
  RobotState s;
  s.q = link_angles(x, 0.0);
  s.qdot = link_angles(xdot, 0.0);
  return s;
}

std::vector<RngStream> streams(std::uint64_t master, int joints) {
  std::vector<RngStream> out;
  for (int j = 0; j < joints; ++j)
    out.emplace_back(derive_seed(master, "obs", j));
  return out;
}

}  // namespace

TEST_CASE("noiseless increments integrate the true observable") {
  SensorConfig cfg;
  cfg.sigma_w = 0.0;
  Eigen::VectorXd x(4);
  x << 0.5, -0.2, 0.1, 0.9;
  auto st = streams(1, 4);
  const Eigen::VectorXd dZ =
      observe(state_with_shape(x, Eigen::VectorXd::Zero(4)), 0.02, cfg, st);
  CHECK(dZ[0] == doctest::Approx(0.01).epsilon(1e-14));
  for (int j = 0; j < 4; ++j)
    CHECK(dZ[j] == doctest::Approx(x[j] * 0.02).epsilon(1e-14));
}

TEST_CASE("the xdot ground-truth hook observes the shape velocity") {
  SensorConfig cfg;
  cfg.sigma_w = 0.0;
  cfg.truth = SensorTruth::ShapeVelocity;
  Eigen::VectorXd xdot(4);
  xdot << 1.0, 0.5, -0.5, 0.0;
  auto st = streams(1, 4);
  const Eigen::VectorXd dZ =
      observe(state_with_shape(Eigen::VectorXd::Zero(4), xdot), 0.02, cfg, st);
  for (int j = 0; j < 4; ++j)
    CHECK(dZ[j] == doctest::Approx(xdot[j] * 0.02).epsilon(1e-14));
}

TEST_CASE("fixed seeds give bit-identical observation sequences") {
  SensorConfig cfg;
  auto a = streams(99, 4);
  auto b = streams(99, 4);
  const RobotState s = state_with_shape(Eigen::VectorXd::Constant(4, 0.3),
                                        Eigen::VectorXd::Zero(4));
  for (int k = 0; k < 100; ++k) {
    const Eigen::VectorXd za = observe(s, 0.02, cfg, a);
    const Eigen::VectorXd zb = observe(s, 0.02, cfg, b);
    CHECK((za - zb).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("increment variance matches sigma_w^2 dt") {
  SensorConfig cfg;  // sigma_w = 0.1
  const RobotState s = state_with_shape(Eigen::VectorXd::Constant(4, 0.3),
                                        Eigen::VectorXd::Zero(4));
  for (double dt : {0.02, 0.1}) {
    auto st = streams(12345, 4);
    const int draws = 100000 / 4;
    double acc = 0.0;
    int count = 0;
    for (int k = 0; k < draws; ++k) {
      const Eigen::VectorXd dZ = observe(s, dt, cfg, st);
      for (int j = 0; j < 4; ++j) {
        const double centered = (dZ[j] - 0.3 * dt) / std::sqrt(dt);
        acc += centered * centered;
        ++count;
      }
    }
    const double var = acc / count;
    CHECK(var == doctest::Approx(cfg.sigma_w * cfg.sigma_w).epsilon(0.03));
  }
}

TEST_CASE("h_approx is the basis inner product") {
  SensorConfig cfg;  // basis sin1,sin2,cos2
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
  for (double theta : {0.0, 1.0, 3.0, 6.0})
    CHECK(h_approx(theta, zero, cfg) == 0.0);

  Eigen::VectorXd r(3);
  r << 1.0, 0.0, 0.0;
  CHECK(h_approx(std::numbers::pi / 2, r, cfg) == doctest::Approx(1.0));

  Eigen::VectorXd s(3);
  s << 0.3, -0.7, 0.2;
  for (double theta : {0.3, 2.2, 5.1}) {
    const double lhs = h_approx(theta, 2.0 * r + 3.0 * s, cfg);
    const double rhs = 2.0 * h_approx(theta, r, cfg) + 3.0 * h_approx(theta, s, cfg);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("zero innovation leaves the weights unchanged") {
  SensorConfig cfg;
  Eigen::VectorXd r(3);
  r << 0.4, -0.1, 0.2;
  Eigen::VectorXd particles(5);
  particles << 0.1, 1.0, 2.0, 4.0, 6.0;
  const double h_hat = 0.37;
  const double dZ = h_hat * 0.02;  // dZ == h_hat dt
  const Eigen::VectorXd next =
      update_sensor_weights(r, dZ, h_hat, particles, 0.01, 0.02, cfg);
  CHECK((next - r).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("synchronized noiseless learning reaches the scalar fixed point") {
  SensorConfig cfg;
  const double theta_star = 1.3;
  const double target = 0.8;  // h_true value at theta_star
  const double alpha = 0.05, dt = 0.02;
  const Eigen::VectorXd particles = Eigen::VectorXd::Constant(64, theta_star);
  const Eigen::VectorXd phi = cfg.basis.eval(theta_star);

  Eigen::VectorXd r = Eigen::VectorXd::Zero(3);
  double s = 0.0;  // independent scalar recursion for r . phi
  for (int k = 0; k < 20000; ++k) {
    const double h_hat = h_approx(theta_star, r, cfg);
    r = update_sensor_weights(r, target * dt, h_hat, particles, alpha, dt, cfg);
    s = s + alpha * dt * phi.squaredNorm() * (target - s);
    CHECK(h_approx(theta_star, r, cfg) == doctest::Approx(s).epsilon(1e-10));
  }
  CHECK(h_approx(theta_star, r, cfg) == doctest::Approx(target).epsilon(1e-6));
}

TEST_CASE("update direction is the ensemble basis average") {
  SensorConfig cfg;
  Eigen::VectorXd particles(4);
  particles << 0.0, 1.0, 2.5, 5.0;
  Eigen::VectorXd phi_mean = Eigen::VectorXd::Zero(3);
  for (int i = 0; i < 4; ++i) phi_mean += cfg.basis.eval(particles[i]);
  phi_mean /= 4.0;

  const Eigen::VectorXd r = Eigen::VectorXd::Zero(3);
  const double dZ = 0.05, h_hat = 0.2, alpha = 0.01, dt = 0.02;
  const Eigen::VectorXd next =
      update_sensor_weights(r, dZ, h_hat, particles, alpha, dt, cfg);
  const Eigen::VectorXd expected = alpha * (dZ - h_hat * dt) * phi_mean;
  CHECK((next - expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("observe validates its stream count") {
  SensorConfig cfg;
  auto st = streams(1, 3);
  const RobotState s = state_with_shape(Eigen::VectorXd::Zero(4),
                                        Eigen::VectorXd::Zero(4));
  CHECK_THROWS_AS(observe(s, 0.02, cfg, st), ConfigError);
}
