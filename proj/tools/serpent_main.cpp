// Command-line laboratory for the snake-robot sensorimotor learning
// pipeline: open-loop simulation, limit-cycle extraction, Q-learning on
// the filter state, policy evaluation and figure-data export.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "serpent/config.hpp"
#include "serpent/csv.hpp"
#include "serpent/harness.hpp"

namespace fs = std::filesystem;
using namespace serpent;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int episodes = 0;
  int periods = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_episodes,
                const char* periods_help = nullptr) {
  cmd->add_option("--config", opts.config_path,
                  "experiment config file (defaults to built-in 5-link)");
  cmd->add_option("--out", opts.out_dir, "output directory");
  cmd->add_option_function<std::uint64_t>(
         "--seed",
         [&opts](const std::uint64_t& v) {
           opts.seed = v;
           opts.seed_set = true;
         },
         "master seed (overrides config)");
  if (with_episodes)
    cmd->add_option("--episodes", opts.episodes, "episode count override")
        ->check(CLI::Range(1, 1000000));
  if (periods_help)
    cmd->add_option("--periods", opts.periods, periods_help)
        ->check(CLI::Range(1, 1000000));
}

ExperimentConfig resolve_config(const CommonOpts& opts,
                                bool periods_are_episode_length = false) {
  ExperimentConfig cfg;
  if (!opts.config_path.empty()) cfg = load_config(opts.config_path);
  if (opts.seed_set) cfg.seed = opts.seed;
  if (!opts.out_dir.empty()) cfg.output_dir = opts.out_dir;
  if (opts.episodes > 0) cfg.learning.episodes = opts.episodes;
  if (periods_are_episode_length && opts.periods > 0)
    cfg.learning.periods_per_episode = opts.periods;
  cfg.validate();
  fs::create_directories(cfg.output_dir);
  save_config(cfg, cfg.output_dir + "/config.txt");
  return cfg;
}

void write_controls_csv(const std::vector<ControlInput>& controls, double dt,
                        const std::string& path) {
  if (controls.empty()) return;
  const int n = static_cast<int>(controls.front().u.size());
  std::string header = "t";
  for (int i = 1; i <= n; ++i) header += ",u" + std::to_string(i);
  CsvWriter csv(path, header);
  for (std::size_t k = 0; k < controls.size(); ++k) {
    csv.begin_row();
    csv.field(static_cast<double>(k) * dt);
    for (int i = 0; i < n; ++i) csv.field(controls[k].u[i]);
    csv.end_row();
  }
}

void write_bellman_csv(const std::vector<EpisodeLog>& episodes,
                       const std::string& path) {
  CsvWriter csv(path, "episode,avg_bellman_error");
  for (const EpisodeLog& log : episodes) {
    csv.begin_row();
    csv.field(log.episode + 1);
    csv.field(episode_error(log));
    csv.end_row();
  }
}

int cmd_simulate(const CommonOpts& opts) {
  const ExperimentConfig cfg = resolve_config(opts);
  const int periods = opts.periods > 0 ? opts.periods : 20;
  const TrajectoryLog log = run_open_loop(cfg, periods);
  log.save_csv(cfg.output_dir + "/trajectory.csv");
  std::printf("simulate: %d periods, net dpsi = %s, net displacement = %s\n",
              periods, format_double(log.net_dpsi).c_str(),
              format_double((log.states.back().r_cm -
                             log.states.front().r_cm)
                                .norm())
                  .c_str());
  std::printf("simulate: wrote %s/trajectory.csv\n", cfg.output_dir.c_str());
  return 0;
}

int cmd_limit_cycle(const CommonOpts& opts) {
  const ExperimentConfig cfg = resolve_config(opts);
  const LimitCycleAtlas atlas =
      find_limit_cycle(cfg.robot, cfg.atlas.settle_periods, cfg.atlas.samples,
                       cfg.learning.dt);
  atlas.save_csv(cfg.output_dir + "/atlas");
  std::printf("limit-cycle: %d joints, K = %d, period = %s s\n",
              atlas.joint_count(), atlas.samples(),
              format_double(atlas.period).c_str());
  std::printf("limit-cycle: wrote %s/atlas_joint*.csv\n",
              cfg.output_dir.c_str());
  return 0;
}

int cmd_learn(const CommonOpts& opts, bool with_traces) {
  const ExperimentConfig cfg = resolve_config(opts, true);
  LearningResult result;
  if (with_traces) {
    TraceFiles traces;
    traces.dir = cfg.output_dir;
    result = run_learning_with_traces(cfg, traces);
  } else {
    result = run_learning(cfg);
  }
  save_episode_metrics(result.episodes, cfg.output_dir + "/metrics.csv");
  save_q_weights(result.q_weights, cfg.output_dir + "/qweights.txt");
  save_sensor_weights(result.sensor_weights,
                      cfg.output_dir + "/sensor_weights.csv");
  result.atlas.save_csv(cfg.output_dir + "/atlas");

  const double first = episode_error(result.episodes.front());
  const double last = episode_error(result.episodes.back());
  std::printf("learn: %d episodes, bellman error %s -> %s, gain fallbacks %ld\n",
              cfg.learning.episodes, format_double(first).c_str(),
              format_double(last).c_str(), result.gain_fallbacks);
  std::printf("learn: wrote metrics.csv, qweights.txt, sensor_weights.csv in %s\n",
              cfg.output_dir.c_str());
  return 0;
}

int cmd_evaluate(const CommonOpts& opts, const std::string& weights_path,
                 const std::string& sensor_weights_path) {
  const ExperimentConfig cfg = resolve_config(opts);
  const FeatureConfig feat{cfg.robot.n,
                           FourierBasis::parse("cos1,sin1,cos2,sin2")};
  const QWeights weights = load_q_weights(weights_path, feat);
  const SensorWeights sensor = load_sensor_weights(
      sensor_weights_path, cfg.sensor, cfg.robot.n - 1);
  const int periods = opts.periods > 0 ? opts.periods : 20;

  const EvaluationResult result =
      run_evaluation(cfg, weights, sensor, periods);
  result.trajectory.save_csv(cfg.output_dir + "/trajectory.csv");
  write_controls_csv(result.controls, cfg.learning.dt,
                     cfg.output_dir + "/controls.csv");
  std::printf(
      "evaluate: %d periods, net dpsi = %s, mean |u| = %s, clamps = %ld\n",
      periods, format_double(result.net_dpsi).c_str(),
      format_double(result.mean_u_norm).c_str(), result.clamp_events);
  std::printf("evaluate: wrote trajectory.csv, controls.csv in %s\n",
              cfg.output_dir.c_str());
  return 0;
}

int cmd_export_figs(const CommonOpts& opts) {
  const ExperimentConfig cfg = resolve_config(opts);
  const int periods = opts.periods > 0 ? opts.periods : 20;

  // orbit tables (limit-cycle structure)
  const LimitCycleAtlas atlas =
      find_limit_cycle(cfg.robot, cfg.atlas.settle_periods, cfg.atlas.samples,
                       cfg.learning.dt);
  atlas.save_csv(cfg.output_dir + "/fig3_limit_cycle");

  // learning run with sensor/filter/learning traces
  TraceFiles traces;
  traces.dir = cfg.output_dir;
  const LearningResult result = run_learning_with_traces(cfg, traces, &atlas);
  save_episode_metrics(result.episodes, cfg.output_dir + "/metrics.csv");
  save_q_weights(result.q_weights, cfg.output_dir + "/qweights.txt");
  save_sensor_weights(result.sensor_weights,
                      cfg.output_dir + "/sensor_weights.csv");
  write_bellman_csv(result.episodes, cfg.output_dir + "/fig6_bellman_error.csv");

  // trajectory comparison: open loop vs learned policy
  const TrajectoryLog open_loop = run_open_loop(cfg, periods);
  open_loop.save_csv(cfg.output_dir + "/fig7_trajectory_openloop.csv");
  const EvaluationResult eval =
      run_evaluation(cfg, result.q_weights, result.sensor_weights, periods,
                     &atlas);
  eval.trajectory.save_csv(cfg.output_dir + "/fig7_trajectory_learned.csv");
  write_controls_csv(eval.controls, cfg.learning.dt,
                     cfg.output_dir + "/fig7_control.csv");

  std::printf("export-figs: open-loop dpsi = %s, learned dpsi = %s\n",
              format_double(open_loop.net_dpsi).c_str(),
              format_double(eval.net_dpsi).c_str());
  std::printf("export-figs: wrote figure CSVs in %s\n", cfg.output_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "serpent: sensorimotor learning laboratory for a planar snake robot\n"
      "(rigid-body gait simulation, per-joint feedback particle filters,\n"
      "continuous-time Q-learning of a distributed turning policy)"};
  app.require_subcommand(1);

  CommonOpts sim_opts, lc_opts, learn_opts, eval_opts, figs_opts;
  std::string weights_path, sensor_weights_path;

  CLI::App* sim = app.add_subcommand("simulate", "open-loop gait rollout");
  add_common(sim, sim_opts, false, "rollout length in periods");

  CLI::App* lc =
      app.add_subcommand("limit-cycle", "extract the per-joint phase atlas");
  add_common(lc, lc_opts, false);

  CLI::App* learn = app.add_subcommand(
      "learn", "run the full learning loop and save weights and metrics");
  add_common(learn, learn_opts, true, "periods per episode override");
  bool learn_traces = false;
  learn->add_flag("--traces", learn_traces,
                  "also write sensor/filter/gain trace CSVs");

  CLI::App* eval = app.add_subcommand(
      "evaluate", "closed-loop rollout of a learned policy");
  add_common(eval, eval_opts, false, "rollout length in periods");
  eval->add_option("--weights", weights_path, "Q-weight checkpoint")
      ->required();
  eval->add_option("--sensor-weights", sensor_weights_path,
                   "learned sensor weights CSV")
      ->required();

  CLI::App* figs = app.add_subcommand(
      "export-figs", "reproduce the figure datasets end to end");
  add_common(figs, figs_opts, true, "rollout length in periods");

  try {
    app.parse(argc, argv);
    if (sim->parsed()) return cmd_simulate(sim_opts);
    if (lc->parsed()) return cmd_limit_cycle(lc_opts);
    if (learn->parsed()) return cmd_learn(learn_opts, learn_traces);
    if (eval->parsed())
      return cmd_evaluate(eval_opts, weights_path, sensor_weights_path);
    if (figs->parsed()) return cmd_export_figs(figs_opts);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
