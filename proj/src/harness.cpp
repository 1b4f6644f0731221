#include "serpent/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "serpent/csv.hpp"

namespace serpent {

namespace {

struct Streams {
  std::vector<RngStream> obs;
  RngStream init;

  static Streams learning(const ExperimentConfig& cfg) {
    Streams s{{}, RngStream(derive_seed(cfg.seed, "episode-init"))};
    for (int j = 0; j < cfg.robot.n - 1; ++j)
      s.obs.emplace_back(derive_seed(cfg.seed, "obs", j));
    return s;
  }

  static Streams evaluation(const ExperimentConfig& cfg) {
    Streams s{{}, RngStream(derive_seed(cfg.seed, "eval-init"))};
    for (int j = 0; j < cfg.robot.n - 1; ++j)
      s.obs.emplace_back(derive_seed(cfg.seed, "eval-obs", j));
    return s;
  }
};

std::vector<ParticleEnsemble> init_filter_bank(const ExperimentConfig& cfg,
                                               const char* purpose) {
  std::vector<ParticleEnsemble> bank;
  for (int j = 0; j < cfg.robot.n - 1; ++j) {
    RngStream rng(derive_seed(cfg.seed, purpose, j));
    bank.push_back(init_particles(cfg.filter.particles, cfg.filter.delta,
                                  cfg.robot.drive_frequency, rng));
  }
  return bank;
}

LimitCycleAtlas atlas_or_find(const ExperimentConfig& cfg,
                              const LimitCycleAtlas* atlas) {
  if (atlas) return *atlas;
  return find_limit_cycle(cfg.robot, cfg.atlas.settle_periods,
                          cfg.atlas.samples, cfg.learning.dt);
}

[[noreturn]] void rethrow_with_context(int episode, int k) {
  const std::string ctx =
      "episode " + std::to_string(episode + 1) + ", step " +
      std::to_string(k + 1) + ": ";
  try {
    throw;
  } catch (const NonConvexHamiltonianError& e) {
    throw NonConvexHamiltonianError(ctx + e.what());
  } catch (const NonFiniteError& e) {
    throw NonFiniteError(ctx + e.what());
  } catch (const SingularFrictionBlockError& e) {
    throw SingularFrictionBlockError(ctx + e.what());
  }
}

}  // namespace

int episode_steps(const ExperimentConfig& cfg) {
  return static_cast<int>(std::lround(cfg.learning.periods_per_episode *
                                      cfg.robot.period() / cfg.learning.dt));
}

double episode_error(const EpisodeLog& log) {
  if (log.bellman_errors.empty())
    throw NumericalError("episode_error: empty episode log");
  double acc = 0.0;
  for (double e : log.bellman_errors) acc += e * e;
  return acc * log.dt / log.span;
}

RobotState random_cycle_state(const LimitCycleAtlas& atlas,
                              const ExperimentConfig& cfg, RngStream& rng,
                              double t) {
  const int n = cfg.robot.n;
  Eigen::VectorXd x(n - 1), xdot(n - 1);
  for (int j = 0; j < n - 1; ++j) {
    const double theta = rng.uniform(0.0, two_pi<double>);
    std::tie(x[j], xdot[j]) = point_of(theta, j, atlas);
  }
  const double psi = rng.uniform(0.0, two_pi<double>);

  RobotState state;
  state.t = t;
  state.q = link_angles(x, psi);
  state.qdot = link_angles(xdot, 0.0);
  const GroupVelocity g =
      group_velocity(state, xdot, ControlInput::zero(n), cfg.robot);
  state.qdot = link_angles(xdot, g.psi_dot);
  state.r_cm.setZero();
  return state;
}

void TrajectoryLog::save_csv(const std::string& path) const {
  if (states.empty()) throw NumericalError("empty trajectory");
  const int n = static_cast<int>(states.front().q.size());
  CsvWriter csv(path, trajectory_header(n));
  for (const RobotState& s : states) {
    csv.begin_row();
    csv.field(s.t);
    for (int j = 0; j < n; ++j) csv.field(s.q[j]);
    for (int j = 0; j < n; ++j) csv.field(s.qdot[j]);
    const Eigen::VectorXd x = shape_coordinates(s.q);
    for (int j = 0; j < n - 1; ++j) csv.field(x[j]);
    csv.field(orientation(s.q));
    csv.field(s.r_cm[0]);
    csv.field(s.r_cm[1]);
    csv.end_row();
  }
}

namespace {

// True when the open-loop drive leaves the shape essentially motionless
// (zero torque amplitudes); there is no periodic orbit to tabulate then
// and the rollout starts from rest.
bool drive_is_degenerate(const ExperimentConfig& cfg) {
  RobotState probe = RobotState::rest(cfg.robot.n);
  const ControlInput u0 = ControlInput::zero(cfg.robot.n);
  const int steps = static_cast<int>(
      std::lround(3.0 * cfg.robot.period() / cfg.learning.dt));
  double amplitude = 0.0;
  for (int k = 0; k < steps; ++k) {
    probe = step(probe, u0, cfg.robot, cfg.learning.dt);
    amplitude = std::max(amplitude,
                         shape_coordinates(probe.q).cwiseAbs().maxCoeff());
  }
  return amplitude < 1e-9;
}

}  // namespace

TrajectoryLog run_open_loop(const ExperimentConfig& cfg, int periods) {
  cfg.validate();
  RobotState state;
  Streams streams = Streams::evaluation(cfg);
  if (drive_is_degenerate(cfg)) {
    state = RobotState::rest(cfg.robot.n);
  } else {
    const LimitCycleAtlas atlas =
        find_limit_cycle(cfg.robot, cfg.atlas.settle_periods,
                         cfg.atlas.samples, cfg.learning.dt);
    state = random_cycle_state(atlas, cfg, streams.init, 0.0);
  }
  const ControlInput u0 = ControlInput::zero(cfg.robot.n);
  const int steps = static_cast<int>(
      std::lround(periods * cfg.robot.period() / cfg.learning.dt));

  TrajectoryLog log;
  log.states.reserve(steps + 1);
  log.states.push_back(state);
  for (int k = 0; k < steps; ++k) {
    state = step(state, u0, cfg.robot, cfg.learning.dt);
    log.states.push_back(state);
  }
  log.net_dpsi =
      orientation(log.states.back().q) - orientation(log.states.front().q);
  return log;
}

LearningResult run_learning(const ExperimentConfig& cfg,
                            const StepObserver* observer,
                            const LimitCycleAtlas* atlas_in) {
  cfg.validate();
  const int n = cfg.robot.n;
  const int joints = n - 1;
  const double dt = cfg.learning.dt;
  const LimitCycleAtlas atlas = atlas_or_find(cfg, atlas_in);

  Streams streams = Streams::learning(cfg);
  LearningResult result;
  result.atlas = atlas;
  result.particles = init_filter_bank(cfg, "particles");
  result.sensor_weights =
      SensorWeights::zero(joints, cfg.sensor.basis_size());

  RngStream weight_rng(derive_seed(cfg.seed, "qweights"));
  FeatureConfig feat{n, FourierBasis::parse("cos1,sin1,cos2,sin2")};
  QWeights weights = init_q_weights(feat, weight_rng);

  const int steps = episode_steps(cfg);
  const int sign = cfg.learning.turn_sign;
  double t = 0.0;

  for (int episode = 0; episode < cfg.learning.episodes; ++episode) {
    RobotState state = random_cycle_state(atlas, cfg, streams.init, t);
    EpisodeLog log;
    log.episode = episode;
    log.dt = dt;
    log.span = cfg.learning.periods_per_episode * cfg.robot.period();
    log.bellman_errors.reserve(steps);
    log.costs.reserve(steps);
    log.psi_trace.reserve(steps + 1);

    PhaseFeatures pf_now = phase_features(result.particles, feat);

    for (int k = 0; k < steps; ++k) {
      try {
        const ControlInput u = exploration_input(
            t, cfg.learning.exploration_amplitude, cfg.robot.drive_frequency,
            n);
        const Eigen::VectorXd dZ = observe(state, dt, cfg.sensor, streams.obs);

        // learner quantities at the step start, weights frozen at w(k)
        const PolicyResult now_min = minimize_hamiltonian(pf_now, weights, feat);
        const double H_now = hamiltonian(pf_now, u, weights, feat);
        const Eigen::VectorXd f_now_u = features(pf_now, u, feat);
        const Eigen::VectorXd f_now_star = features(pf_now, now_min.u_star, feat);

        const double psi_now = orientation(state.q);
        const RobotState next_state = step(state, u, cfg.robot, dt);
        const double psi_next = orientation(next_state.q);

        // per-joint sensor and filter updates; these are independent and
        // could fan out to workers at larger n or N
        Eigen::VectorXd h_hat(joints), gain_cond(joints), gain_norm(joints);
        for (int j = 0; j < joints; ++j) {
          const Eigen::VectorXd r_j = result.sensor_weights.r.row(j);
          const GainSolution gain = galerkin_gain(
              result.particles[j].theta, r_j, cfg.sensor,
              cfg.filter.gain_basis);
          h_hat[j] = gain.h_hat;
          gain_cond[j] = gain.cond;
          gain_norm[j] = gain.kappa.norm();
          if (gain.regularized) ++result.gain_fallbacks;

          result.sensor_weights.r.row(j) =
              update_sensor_weights(r_j, dZ[j], gain.h_hat,
                                    result.particles[j].theta,
                                    cfg.sensor.learning_rate, dt, cfg.sensor);
          result.particles[j] =
              fpf_step(result.particles[j], dZ[j], r_j, dt, cfg.sensor.sigma_w,
                       cfg.sensor, cfg.filter.gain_basis, gain);
        }

        // learner quantities at the step end, weights still w(k)
        const PhaseFeatures pf_next = phase_features(result.particles, feat);
        const PolicyResult next_min =
            minimize_hamiltonian(pf_next, weights, feat);
        const Eigen::VectorXd f_next_star =
            features(pf_next, next_min.u_star, feat);

        const double cost =
            stage_cost(sign * psi_next, sign * psi_now, u,
                       cfg.learning.epsilon, dt);
        const double E = bellman_error(next_min.H_min, now_min.H_min, cost,
                                       H_now, cfg.learning.gamma, dt);
        const Eigen::VectorXd grad =
            (f_next_star - f_now_star) / dt - cfg.learning.gamma * f_now_u;
        weights = update_q_weights(weights, E, grad, cfg.learning.alpha, dt);

        log.bellman_errors.push_back(E);
        log.costs.push_back(cost);
        log.psi_trace.push_back(psi_now);
        if (k == steps - 1) log.psi_trace.push_back(psi_next);

        if (observer && observer->fn && episode >= observer->from_episode &&
            k % std::max(1, observer->stride) == 0) {
          StepTrace trace;
          trace.episode = episode;
          trace.k = k;
          trace.t = t;
          trace.u = u;
          trace.dZ = dZ;
          trace.h_hat = h_hat;
          trace.r = result.sensor_weights.r;
          trace.theta.reserve(joints);
          trace.omega.reserve(joints);
          for (int j = 0; j < joints; ++j) {
            trace.theta.push_back(result.particles[j].theta);
            trace.omega.push_back(result.particles[j].omega);
          }
          trace.gain_cond = gain_cond;
          trace.gain_norm = gain_norm;
          trace.x = shape_coordinates(state.q);
          trace.xdot = shape_coordinates(state.qdot);
          trace.psi_now = psi_now;
          trace.psi_next = psi_next;
          trace.H_now = H_now;
          trace.H_min_now = now_min.H_min;
          trace.H_min_next = next_min.H_min;
          trace.cost = cost;
          trace.bellman = E;
          trace.u_star_now = now_min.u_star;
          trace.w = weights.w;
          observer->fn(trace);
        }

        state = next_state;
        pf_now = pf_next;
        t += dt;
      } catch (const NumericalError&) {
        rethrow_with_context(episode, k);
      }
    }

    log.weight_snapshot = weights;
    log.sensor_weight_snapshot = result.sensor_weights.r;
    result.episodes.push_back(std::move(log));
  }

  result.q_weights = weights;
  return result;
}

EvaluationResult run_evaluation(const ExperimentConfig& cfg,
                                const QWeights& weights,
                                const SensorWeights& sensor_weights,
                                int periods,
                                const LimitCycleAtlas* atlas_in) {
  cfg.validate();
  const int n = cfg.robot.n;
  const int joints = n - 1;
  const double dt = cfg.learning.dt;
  const LimitCycleAtlas atlas = atlas_or_find(cfg, atlas_in);

  Streams streams = Streams::evaluation(cfg);
  std::vector<ParticleEnsemble> particles = init_filter_bank(cfg, "eval-particles");
  FeatureConfig feat{n, FourierBasis::parse("cos1,sin1,cos2,sin2")};

  RobotState state = random_cycle_state(atlas, cfg, streams.init, 0.0);
  const int steps = static_cast<int>(
      std::lround(periods * cfg.robot.period() / cfg.learning.dt));

  EvaluationResult result;
  result.trajectory.states.reserve(steps + 1);
  result.trajectory.states.push_back(state);
  result.controls.reserve(steps);

  for (int k = 0; k < steps; ++k) {
    const PhaseFeatures pf = phase_features(particles, feat);
    PolicyResult policy = minimize_hamiltonian(pf, weights, feat);
    ControlInput u = policy.u_star;
    for (int i = 0; i < n; ++i) {
      if (std::abs(u.u[i]) > cfg.learning.policy_clamp) {
        u.u[i] = std::clamp(u.u[i], -cfg.learning.policy_clamp,
                            cfg.learning.policy_clamp);
        ++result.clamp_events;
      }
    }

    const Eigen::VectorXd dZ = observe(state, dt, cfg.sensor, streams.obs);
    state = step(state, u, cfg.robot, dt);
    for (int j = 0; j < joints; ++j)
      particles[j] = fpf_step(particles[j], dZ[j], sensor_weights.r.row(j), dt,
                              cfg.sensor.sigma_w, cfg.sensor,
                              cfg.filter.gain_basis);

    result.mean_u_norm += u.u.norm();
    result.controls.push_back(u);
    result.trajectory.states.push_back(state);
  }
  result.mean_u_norm /= steps;
  result.net_dpsi =
      orientation(result.trajectory.states.back().q) -
      orientation(result.trajectory.states.front().q);
  result.trajectory.net_dpsi = result.net_dpsi;
  return result;
}

LearningResult run_learning_with_traces(const ExperimentConfig& cfg,
                                        const TraceFiles& traces,
                                        const LimitCycleAtlas* atlas) {
  namespace fs = std::filesystem;
  fs::create_directories(traces.dir);
  const int M_h = cfg.sensor.basis_size();

  std::string r_header = "t,j";
  for (int m = 1; m <= M_h; ++m) r_header += ",r" + std::to_string(m);
  CsvWriter r_csv(traces.dir + "/sensor_weights_trace.csv", r_header);
  CsvWriter obs_csv(traces.dir + "/observations.csv", "t,j,dZ");
  CsvWriter gain_csv(traces.dir + "/gain_diagnostics.csv",
                     "t,j,cond_A,kappa_norm");
  CsvWriter particle_csv(traces.dir + "/particles.csv", "t,j,i,theta,omega");
  CsvWriter hhat_csv(traces.dir + "/observation_fit.csv", "t,j,h_hat,h_true");

  const auto& sensor = cfg.sensor;
  StepObserver obs;
  obs.stride = traces.stride;
  obs.fn = [&](const StepTrace& trace) {
    for (int j = 0; j < trace.dZ.size(); ++j) {
      r_csv.begin_row();
      r_csv.field(trace.t);
      r_csv.field(j + 1);
      for (int m = 0; m < M_h; ++m) r_csv.field(trace.r(j, m));
      r_csv.end_row();

      obs_csv.begin_row();
      obs_csv.field(trace.t);
      obs_csv.field(j + 1);
      obs_csv.field(trace.dZ[j]);
      obs_csv.end_row();

      gain_csv.begin_row();
      gain_csv.field(trace.t);
      gain_csv.field(j + 1);
      gain_csv.field(trace.gain_cond[j]);
      gain_csv.field(trace.gain_norm[j]);
      gain_csv.end_row();

      hhat_csv.begin_row();
      hhat_csv.field(trace.t);
      hhat_csv.field(j + 1);
      hhat_csv.field(trace.h_hat[j]);
      hhat_csv.field(
          sensor_truth_value(sensor.truth, trace.x[j], trace.xdot[j]));
      hhat_csv.end_row();
    }
    if (trace.k % std::max(1, traces.particles_stride) == 0) {
      for (std::size_t j = 0; j < trace.theta.size(); ++j)
        for (int i = 0; i < trace.theta[j].size(); ++i) {
          particle_csv.begin_row();
          particle_csv.field(trace.t);
          particle_csv.field(static_cast<int>(j) + 1);
          particle_csv.field(i + 1);
          particle_csv.field(trace.theta[j][i]);
          particle_csv.field(trace.omega[j][i]);
          particle_csv.end_row();
        }
    }
  };
  return run_learning(cfg, &obs, atlas);
}

void save_episode_metrics(const std::vector<EpisodeLog>& episodes,
                          const std::string& path) {
  CsvWriter csv(path, "episode,avg_bellman_error,net_dpsi,mean_cost");
  for (const EpisodeLog& log : episodes) {
    double mean_cost = 0.0;
    for (double c : log.costs) mean_cost += c;
    if (!log.costs.empty()) mean_cost /= static_cast<double>(log.costs.size());
    csv.begin_row();
    csv.field(log.episode + 1);
    csv.field(episode_error(log));
    csv.field(log.psi_trace.back() - log.psi_trace.front());
    csv.field(mean_cost);
    csv.end_row();
  }
}

void save_sensor_weights(const SensorWeights& weights,
                         const std::string& path) {
  CsvWriter csv(path, "j,m,value");
  for (Eigen::Index j = 0; j < weights.r.rows(); ++j)
    for (Eigen::Index m = 0; m < weights.r.cols(); ++m) {
      csv.begin_row();
      csv.field(static_cast<int>(j) + 1);
      csv.field(static_cast<int>(m) + 1);
      csv.field(weights.r(j, m));
      csv.end_row();
    }
}

SensorWeights load_sensor_weights(const std::string& path,
                                  const SensorConfig& cfg, int joints) {
  CsvTable table = CsvTable::load(path);
  SensorWeights weights = SensorWeights::zero(joints, cfg.basis_size());
  for (const auto& row : table.rows) {
    const int j = static_cast<int>(row[0]) - 1;
    const int m = static_cast<int>(row[1]) - 1;
    if (j < 0 || j >= joints || m < 0 || m >= cfg.basis_size())
      throw ConfigError("sensor weight index out of range in '" + path + "'");
    weights.r(j, m) = row[2];
  }
  return weights;
}

}  // namespace serpent
