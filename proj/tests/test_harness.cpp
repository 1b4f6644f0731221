#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "algorithm1_oracle.hpp"
#include "oracles.hpp"
#include "serpent/config.hpp"
#include "serpent/harness.hpp"

using namespace serpent;

namespace {

ExperimentConfig toy_config() {
  ExperimentConfig cfg;
  cfg.robot.n = 3;
  cfg.robot.mass = Eigen::VectorXd::Ones(3);
  cfg.robot.half_length = Eigen::VectorXd::Ones(3);
  cfg.robot.inertia = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
  cfg.robot.friction_tangent = Eigen::VectorXd::Constant(3, 0.1);
  cfg.robot.friction_normal = Eigen::VectorXd::Constant(3, 0.5);
  cfg.robot.spring = Eigen::VectorXd::Constant(2, 3.0);
  cfg.robot.joint_damping = Eigen::VectorXd::Constant(2, 0.1);
  cfg.robot.torque_amplitude = (Eigen::VectorXd(2) << 2.0, 1.2).finished();
  cfg.robot.torque_phase = serpenoid_phases(3);
  cfg.robot.drive_frequency = 1.0;
  cfg.filter.particles = 8;
  cfg.filter.gain_basis = FourierBasis::parse("sin1,cos1");
  cfg.learning.episodes = 1;
  cfg.learning.periods_per_episode = 1;
  cfg.atlas.settle_periods = 40;
  cfg.atlas.samples = 64;
  cfg.seed = 2024;
  return cfg;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("seed derivation is deterministic and purpose-separated") {
  CHECK(derive_seed(1, "obs", 0) == derive_seed(1, "obs", 0));
  CHECK(derive_seed(1, "obs", 0) != derive_seed(1, "obs", 1));
  CHECK(derive_seed(1, "obs", 0) != derive_seed(1, "particles", 0));
  CHECK(derive_seed(1, "obs", 0) != derive_seed(2, "obs", 0));
}

TEST_CASE("config serialization round trip") {
  ExperimentConfig cfg;
  cfg.robot = RobotParams::five_link();
  cfg.robot.torque_phase = (Eigen::VectorXd(4) << 0.1, 0.9, 2.2, 3.3).finished();
  cfg.sensor.sigma_w = 0.2;
  cfg.sensor.truth = SensorTruth::ShapeVelocity;
  cfg.sensor.learning_rate = 0.005;
  cfg.filter.particles = 64;
  cfg.filter.delta = 0.03;
  cfg.filter.gain_basis = FourierBasis::parse("sin1,cos1");
  cfg.learning.gamma = 0.9;
  cfg.learning.epsilon = 5.0;
  cfg.learning.alpha = 0.02;
  cfg.learning.exploration_amplitude = 0.25;
  cfg.learning.dt = 0.01;
  cfg.learning.periods_per_episode = 7;
  cfg.learning.episodes = 42;
  cfg.learning.policy_clamp = 0.9;
  cfg.learning.turn_sign = -1;
  cfg.atlas.settle_periods = 33;
  cfg.atlas.samples = 128;
  cfg.seed = 987654321;
  cfg.output_dir = "results/run7";

  const ExperimentConfig back = parse_config(serialize_config(cfg));
  CHECK(back == cfg);
}

TEST_CASE("config parsing errors") {
  CHECK_THROWS_AS(parse_config("[robot]\nlinks = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[robot]\nmystery = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[robot\nlinks = 5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[learning]\nturn = sideways\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[robot]\nlinks = 5\nmass = 1,2\n"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config("[sensor]\nbasis = tan1\n"), ConfigError);
}

TEST_CASE("scalar config values broadcast to per-link vectors") {
  const ExperimentConfig cfg = parse_config("[robot]\nlinks = 5\nmass = 2.5\n");
  CHECK(cfg.robot.mass.size() == 5);
  CHECK((cfg.robot.mass.array() == 2.5).all());
}

TEST_CASE("episode step count follows the rounded loop bound") {
  ExperimentConfig cfg;
  CHECK(episode_steps(cfg) == 3142);  // 10 * 2*pi / 0.02
  cfg.learning.periods_per_episode = 1;
  CHECK(episode_steps(cfg) == 314);
}

TEST_CASE("episode error is the L2 average of the Bellman residuals") {
  EpisodeLog log;
  log.dt = 0.02;
  log.span = 10 * two_pi<double>;
  const int steps = 3142;

  SUBCASE("zero errors") {
    log.bellman_errors.assign(steps, 0.0);
    CHECK(episode_error(log) == 0.0);
  }
  SUBCASE("unit errors give one up to step-count rounding") {
    log.bellman_errors.assign(steps, 1.0);
    CHECK(episode_error(log) == doctest::Approx(1.0).epsilon(1e-3));
  }
  SUBCASE("random errors match an independent summation") {
    std::mt19937_64 eng(5);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    long double acc = 0.0L;
    for (int k = 0; k < steps; ++k) {
      const double e = dist(eng);
      log.bellman_errors.push_back(e);
      acc += static_cast<long double>(e) * e * 0.02L;
    }
    acc /= 10.0L * two_pi<long double>;
    CHECK(episode_error(log) ==
          doctest::Approx(static_cast<double>(acc)).epsilon(1e-12));
  }
}

TEST_CASE("open loop with zero drive stays at rest") {
  ExperimentConfig cfg = toy_config();
  cfg.robot.torque_amplitude.setZero();
  const TrajectoryLog log = run_open_loop(cfg, 2);
  CHECK(log.states.back().r_cm.norm() < 1e-6);
  CHECK(std::abs(log.net_dpsi) < 1e-9);
}

TEST_CASE("the benchmark gait moves the robot forward") {
  ExperimentConfig cfg;  // 5-link benchmark
  const TrajectoryLog log = run_open_loop(cfg, 20);
  const double net =
      (log.states.back().r_cm - log.states.front().r_cm).norm();

  // per-period wobble: deviation from the straight drift line across the
  // final period
  const int period_steps = 314;
  const std::size_t last = log.states.size() - 1;
  const std::size_t first = last - period_steps;
  double wobble = 0.0;
  for (std::size_t k = first; k <= last; ++k) {
    const double s =
        static_cast<double>(k - first) / static_cast<double>(period_steps);
    const Eigen::Vector2d line = (1.0 - s) * log.states[first].r_cm +
                                 s * log.states[last].r_cm;
    wobble = std::max(wobble, (log.states[k].r_cm - line).norm());
  }
  CHECK(net > 5.0 * wobble);
  CHECK(net > 1.0);  // meters of real travel, not numerical drift
}

TEST_CASE("open loop runs are deterministic given the seed") {
  ExperimentConfig cfg = toy_config();
  const std::string a = temp_path("serpent_ol_a.csv");
  const std::string b = temp_path("serpent_ol_b.csv");
  run_open_loop(cfg, 2).save_csv(a);
  run_open_loop(cfg, 2).save_csv(b);
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(fa)), {});
  const std::string sb((std::istreambuf_iterator<char>(fb)), {});
  CHECK(sa == sb);
  CHECK(sa.find("t,q1,q2,q3,qdot1") == 0);
}

TEST_CASE("learning episodes account for every step") {
  ExperimentConfig cfg = toy_config();
  cfg.learning.episodes = 2;
  const LearningResult result = run_learning(cfg);
  REQUIRE(result.episodes.size() == 2);
  const int steps = episode_steps(cfg);
  for (const EpisodeLog& log : result.episodes) {
    CHECK(static_cast<int>(log.bellman_errors.size()) == steps);
    CHECK(static_cast<int>(log.costs.size()) == steps);
    CHECK(static_cast<int>(log.psi_trace.size()) == steps + 1);
  }
}

TEST_CASE("a frozen learner keeps its weights") {
  ExperimentConfig cfg = toy_config();
  cfg.learning.alpha = 0.0;
  cfg.learning.episodes = 2;
  const LearningResult result = run_learning(cfg);
  CHECK((result.episodes[0].weight_snapshot.w -
         result.episodes[1].weight_snapshot.w)
            .cwiseAbs()
            .maxCoeff() == 0.0);
  CHECK((result.q_weights.w - result.episodes[0].weight_snapshot.w)
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("learning runs are bit-reproducible") {
  ExperimentConfig cfg = toy_config();
  cfg.learning.episodes = 2;
  const std::string a = temp_path("serpent_metrics_a.csv");
  const std::string b = temp_path("serpent_metrics_b.csv");
  save_episode_metrics(run_learning(cfg).episodes, a);
  save_episode_metrics(run_learning(cfg).episodes, b);
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(fa)), {});
  const std::string sb((std::istreambuf_iterator<char>(fb)), {});
  CHECK(sa == sb);
  CHECK(sa.find("episode,avg_bellman_error,net_dpsi,mean_cost") == 0);
}

TEST_CASE("zero pair weights reproduce the open-loop trajectory exactly") {
  ExperimentConfig cfg = toy_config();
  const FeatureConfig feat{3, FourierBasis::parse("cos1,sin1,cos2,sin2")};
  RngStream rng(derive_seed(cfg.seed, "qweights"));
  QWeights w = init_q_weights(feat, rng);
  w.group2().setZero();
  const SensorWeights r = SensorWeights::zero(2, cfg.sensor.basis_size());

  const TrajectoryLog open = run_open_loop(cfg, 2);
  const EvaluationResult eval = run_evaluation(cfg, w, r, 2);
  REQUIRE(open.states.size() == eval.trajectory.states.size());
  for (std::size_t k = 0; k < open.states.size(); ++k) {
    CHECK((open.states[k].q - eval.trajectory.states[k].q)
              .cwiseAbs()
              .maxCoeff() == 0.0);
    CHECK((open.states[k].r_cm - eval.trajectory.states[k].r_cm)
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
  CHECK(eval.mean_u_norm == 0.0);
}

TEST_CASE("sensor weight file round trip") {
  SensorConfig sensor;
  SensorWeights w = SensorWeights::zero(4, sensor.basis_size());
  w.r(0, 0) = 0.25;
  w.r(3, 2) = -1.75;
  const std::string path = temp_path("serpent_sensor_w.csv");
  save_sensor_weights(w, path);
  const SensorWeights back = load_sensor_weights(path, sensor, 4);
  CHECK((back.r - w.r).cwiseAbs().maxCoeff() == 0.0);
}

// Line-by-line transcription of the learning loop (shared with the
// acceptance suite); every intermediate quantity must agree.
TEST_CASE("learning loop matches the scripted oracle on every quantity") {
  ExperimentConfig cfg = toy_config();
  cfg.filter.particles = 4;
  const oracle::Algorithm1Deviation dev =
      oracle::run_algorithm1_comparison(cfg, 50);
  CHECK(dev.u < 1e-10);
  CHECK(dev.dZ < 1e-10);
  CHECK(dev.h_hat < 1e-10);
  CHECK(dev.r < 1e-10);
  CHECK(dev.theta < 1e-10);
  CHECK(dev.hamiltonians < 1e-10);
  CHECK(dev.u_star < 1e-10);
  CHECK(dev.cost < 1e-10);
  CHECK(dev.bellman < 1e-10);
  CHECK(dev.w < 1e-10);
}
