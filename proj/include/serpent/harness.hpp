#ifndef SERPENT_HARNESS_HPP
#define SERPENT_HARNESS_HPP

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

#include "serpent/config.hpp"
#include "serpent/limit_cycle.hpp"
#include "serpent/qlearning.hpp"

namespace serpent {

// Everything recorded about one learning episode.
struct EpisodeLog {
  int episode = 0;
  std::vector<double> bellman_errors;  // E(k)
  std::vector<double> costs;           // c(k)
  std::vector<double> psi_trace;       // psi at the start of each step
  QWeights weight_snapshot;            // at episode end
  Eigen::MatrixXd sensor_weight_snapshot;  // (n-1) x M_h, at episode end
  double dt = 0.0;
  double span = 0.0;  // n_T * T [s]
};

// L2 Bellman-error average over one episode:
//   e = sum_k |E(k)|^2 dt / (n_T T).
double episode_error(const EpisodeLog& log);

// Per-step view handed to an optional observer during learning; used by
// trace export and by the end-to-end oracle tests.
struct StepTrace {
  int episode = 0;
  int k = 0;         // step index within the episode
  double t = 0.0;    // global time at the step start
  ControlInput u;    // exploration input applied
  Eigen::VectorXd dZ;
  Eigen::VectorXd h_hat;   // per joint, before the update
  Eigen::MatrixXd r;       // sensor weights after the update
  std::vector<Eigen::VectorXd> theta;  // particle phases after the update
  std::vector<Eigen::VectorXd> omega;  // particle frequencies (fixed)
  Eigen::VectorXd gain_cond;           // cond(A) per joint
  Eigen::VectorXd gain_norm;           // |kappa| per joint
  Eigen::VectorXd x, xdot;             // true shape state at the step start
  double psi_now = 0.0, psi_next = 0.0;
  double H_now = 0.0, H_min_now = 0.0, H_min_next = 0.0;
  double cost = 0.0, bellman = 0.0;
  ControlInput u_star_now;  // minimizer at the step start
  Eigen::VectorXd w;        // Q weights after the update
};

struct StepObserver {
  int stride = 1;            // observe every stride-th step
  int from_episode = 0;      // first observed episode (0-based)
  std::function<void(const StepTrace&)> fn;
};

struct TrajectoryLog {
  std::vector<RobotState> states;
  double net_dpsi = 0.0;

  void save_csv(const std::string& path) const;
};

// Simulates the open-loop gait (u = 0) from a seeded on-cycle initial
// state and verifies the limit cycle exists.  The same seed yields the
// same initial state as run_evaluation, so zero policies reproduce the
// open-loop trajectory exactly.
TrajectoryLog run_open_loop(const ExperimentConfig& cfg, int periods);

struct LearningResult {
  QWeights q_weights;
  SensorWeights sensor_weights;
  std::vector<EpisodeLog> episodes;
  LimitCycleAtlas atlas;
  std::vector<ParticleEnsemble> particles;  // final filter state
  long clamp_events = 0;
  long gain_fallbacks = 0;
};

// Runs the full learning loop: per episode, the robot restarts from a
// random on-cycle state while filter, sensor and Q weights persist.  Each
// step applies the exploration input, draws the observation increments,
// advances the simulator, updates sensor weights and particles per joint,
// then performs one Bellman-error gradient step on the Q weights.
LearningResult run_learning(const ExperimentConfig& cfg,
                            const StepObserver* observer = nullptr,
                            const LimitCycleAtlas* atlas = nullptr);

struct EvaluationResult {
  TrajectoryLog trajectory;
  double net_dpsi = 0.0;
  double mean_u_norm = 0.0;
  long clamp_events = 0;
  std::vector<ControlInput> controls;
};

// Closed-loop rollout of the learned distributed policy: filters run on
// live observations with the learned (frozen) sensor weights, and
// u = clamp(u*(theta^N; w)) enters the simulator.
EvaluationResult run_evaluation(const ExperimentConfig& cfg,
                                const QWeights& weights,
                                const SensorWeights& sensor_weights,
                                int periods,
                                const LimitCycleAtlas* atlas = nullptr);

// Episode step count n_T * (2 pi / omega0) / dt, rounded to nearest.
int episode_steps(const ExperimentConfig& cfg);

// Seeded on-cycle initial state: an independent uniform phase per joint
// mapped through the atlas, uniform orientation, center of mass at the
// origin.
RobotState random_cycle_state(const LimitCycleAtlas& atlas,
                              const ExperimentConfig& cfg, RngStream& rng,
                              double t);

// Sensor weight trace ("t,j,r1..rMh"), observation log ("t,j,dZ"),
// particle snapshots ("t,j,i,theta,omega") and gain diagnostics
// ("t,j,cond_A,kappa_norm") written during a learning run.
struct TraceFiles {
  std::string dir;
  int stride = 10;
  int particles_stride = 314;  // snapshot cadence for particle dumps
};

LearningResult run_learning_with_traces(const ExperimentConfig& cfg,
                                        const TraceFiles& traces,
                                        const LimitCycleAtlas* atlas = nullptr);

// Writes "episode,avg_bellman_error,net_dpsi,mean_cost" for a finished run.
void save_episode_metrics(const std::vector<EpisodeLog>& episodes,
                          const std::string& path);

void save_sensor_weights(const SensorWeights& weights, const std::string& path);
SensorWeights load_sensor_weights(const std::string& path,
                                  const SensorConfig& cfg, int joints);

}  // namespace serpent

#endif  // SERPENT_HARNESS_HPP
