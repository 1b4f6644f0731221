#include "serpent/config.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "serpent/csv.hpp"

namespace serpent {

namespace {

std::string join(const Eigen::VectorXd& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v[i]);
  }
  return out;
}

Eigen::VectorXd split_vector(const std::string& text, int expected,
                             const std::string& key) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ','))
    values.push_back(std::strtod(cell.c_str(), nullptr));
  if (values.empty()) throw ConfigError("empty vector for key '" + key + "'");
  if (static_cast<int>(values.size()) == 1 && expected > 1)
    return Eigen::VectorXd::Constant(expected, values[0]);  // broadcast
  if (static_cast<int>(values.size()) != expected)
    throw ConfigError("key '" + key + "' expects " + std::to_string(expected) +
                      " values, got " + std::to_string(values.size()));
  Eigen::VectorXd v(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) v[i] = values[i];
  return v;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

class KeyValueStore {
 public:
  explicit KeyValueStore(const std::string& text) {
    std::stringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          throw ConfigError("line " + std::to_string(lineno) +
                            ": unterminated section header");
        section = trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError("line " + std::to_string(lineno) +
                          ": expected key = value");
      const std::string key = section + "." + trim(line.substr(0, eq));
      values_[key] = trim(line.substr(eq + 1));
    }
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end())
      throw ConfigError("missing config key '" + key + "'");
    used_.insert(key);
    return it->second;
  }

  std::string get(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    used_.insert(key);
    return it->second;
  }

  double get_double(const std::string& key) const {
    return std::strtod(get(key).c_str(), nullptr);
  }

  double get_double(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    return get_double(key);
  }

  int get_int(const std::string& key, int fallback) const {
    if (!has(key)) return fallback;
    return static_cast<int>(std::strtol(get(key).c_str(), nullptr, 10));
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    return std::strtoull(get(key).c_str(), nullptr, 10);
  }

  void check_all_used() const {
    for (const auto& [key, value] : values_)
      if (!used_.count(key))
        throw ConfigError("unknown config key '" + key + "'");
  }

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

}  // namespace

void ExperimentConfig::validate() const {
  robot.validate();
  if (!(sensor.sigma_w > 0)) throw ConfigError("sensor.sigma_w must be > 0");
  if (!(sensor.learning_rate > 0))
    throw ConfigError("sensor.learning_rate must be > 0");
  if (filter.particles < 2) throw ConfigError("filter.particles must be >= 2");
  if (!(filter.delta >= 0 && filter.delta < robot.drive_frequency))
    throw ConfigError("filter.delta must satisfy 0 <= delta < omega0");
  if (filter.particles <= filter.gain_basis.size())
    throw ConfigError("filter.particles must exceed the gain basis size");
  if (!(learning.gamma > 0 && learning.epsilon > 0 && learning.alpha >= 0 &&
        learning.dt > 0 && learning.periods_per_episode > 0 &&
        learning.episodes > 0 && learning.exploration_amplitude >= 0))
    throw ConfigError("learning parameters must be positive");
  if (!(learning.policy_clamp > 0 && learning.policy_clamp < 1))
    throw ConfigError("learning.policy_clamp must lie in (0, 1)");
  if (learning.turn_sign != 1 && learning.turn_sign != -1)
    throw ConfigError("learning.turn must be cw or ccw");
  if (atlas.settle_periods < 1 || atlas.samples < 8)
    throw ConfigError("atlas needs settle_periods >= 1 and samples >= 8");
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  auto robot_eq = [&] {
    const RobotParams &x = a.robot, &y = b.robot;
    return x.n == y.n && x.mass == y.mass && x.half_length == y.half_length &&
           x.inertia == y.inertia &&
           x.friction_tangent == y.friction_tangent &&
           x.friction_normal == y.friction_normal && x.spring == y.spring &&
           x.joint_damping == y.joint_damping &&
           x.torque_amplitude == y.torque_amplitude &&
           x.torque_phase == y.torque_phase &&
           x.drive_frequency == y.drive_frequency;
  };
  return robot_eq() && a.sensor == b.sensor && a.filter == b.filter &&
         a.learning == b.learning && a.atlas == b.atlas && a.seed == b.seed &&
         a.output_dir == b.output_dir;
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  const RobotParams& r = cfg.robot;
  out << "[robot]\n";
  out << "links = " << r.n << "\n";
  out << "mass = " << join(r.mass) << "\n";
  out << "half_length = " << join(r.half_length) << "\n";
  out << "inertia = " << join(r.inertia) << "\n";
  out << "friction_tangent = " << join(r.friction_tangent) << "\n";
  out << "friction_normal = " << join(r.friction_normal) << "\n";
  out << "spring = " << join(r.spring) << "\n";
  out << "joint_damping = " << join(r.joint_damping) << "\n";
  out << "torque_amplitude = " << join(r.torque_amplitude) << "\n";
  out << "torque_phase = " << join(r.torque_phase) << "\n";
  out << "drive_frequency = " << format_double(r.drive_frequency) << "\n";
  out << "\n[sensor]\n";
  out << "sigma_w = " << format_double(cfg.sensor.sigma_w) << "\n";
  out << "ground_truth = " << to_string(cfg.sensor.truth) << "\n";
  out << "basis = " << cfg.sensor.basis.str() << "\n";
  out << "learning_rate = " << format_double(cfg.sensor.learning_rate) << "\n";
  out << "\n[filter]\n";
  out << "particles = " << cfg.filter.particles << "\n";
  out << "delta = " << format_double(cfg.filter.delta) << "\n";
  out << "gain_basis = " << cfg.filter.gain_basis.str() << "\n";
  out << "\n[learning]\n";
  out << "gamma = " << format_double(cfg.learning.gamma) << "\n";
  out << "epsilon = " << format_double(cfg.learning.epsilon) << "\n";
  out << "alpha = " << format_double(cfg.learning.alpha) << "\n";
  out << "exploration_amplitude = "
      << format_double(cfg.learning.exploration_amplitude) << "\n";
  out << "dt = " << format_double(cfg.learning.dt) << "\n";
  out << "periods_per_episode = " << cfg.learning.periods_per_episode << "\n";
  out << "episodes = " << cfg.learning.episodes << "\n";
  out << "policy_clamp = " << format_double(cfg.learning.policy_clamp) << "\n";
  out << "turn = " << (cfg.learning.turn_sign > 0 ? "cw" : "ccw") << "\n";
  out << "\n[atlas]\n";
  out << "settle_periods = " << cfg.atlas.settle_periods << "\n";
  out << "samples = " << cfg.atlas.samples << "\n";
  out << "\n[run]\n";
  out << "seed = " << cfg.seed << "\n";
  out << "out = " << cfg.output_dir << "\n";
  return out.str();
}

ExperimentConfig parse_config(const std::string& text) {
  const KeyValueStore kv(text);
  ExperimentConfig cfg;

  RobotParams& r = cfg.robot;
  r.n = kv.get_int("robot.links", 5);
  if (r.n < 2) throw ConfigError("robot.links must be >= 2");
  auto vec = [&](const std::string& key, int len,
                 const Eigen::VectorXd& fallback) {
    if (!kv.has(key)) return fallback;
    return split_vector(kv.get(key), len, key);
  };
  const RobotParams defaults = RobotParams::five_link();
  auto defv = [&](const Eigen::VectorXd& source, int len) {
    if (r.n == defaults.n) return source;
    return Eigen::VectorXd(Eigen::VectorXd::Constant(len, source[0]));
  };
  r.mass = vec("robot.mass", r.n, defv(defaults.mass, r.n));
  r.half_length = vec("robot.half_length", r.n, defv(defaults.half_length, r.n));
  r.inertia = vec("robot.inertia", r.n, defv(defaults.inertia, r.n));
  r.friction_tangent =
      vec("robot.friction_tangent", r.n, defv(defaults.friction_tangent, r.n));
  r.friction_normal =
      vec("robot.friction_normal", r.n, defv(defaults.friction_normal, r.n));
  r.spring = vec("robot.spring", r.n - 1, defv(defaults.spring, r.n - 1));
  r.joint_damping =
      vec("robot.joint_damping", r.n - 1, defv(defaults.joint_damping, r.n - 1));
  r.torque_amplitude = vec("robot.torque_amplitude", r.n - 1,
                           defv(defaults.torque_amplitude, r.n - 1));
  if (kv.has("robot.torque_phase") && kv.get("robot.torque_phase") != "auto")
    r.torque_phase = split_vector(kv.get("robot.torque_phase"), r.n - 1,
                                  "robot.torque_phase");
  else
    r.torque_phase = serpenoid_phases(r.n);
  r.drive_frequency = kv.get_double("robot.drive_frequency", 1.0);

  cfg.sensor.sigma_w = kv.get_double("sensor.sigma_w", cfg.sensor.sigma_w);
  cfg.sensor.truth = sensor_truth_from_string(
      kv.get("sensor.ground_truth", to_string(cfg.sensor.truth)));
  if (kv.has("sensor.basis"))
    cfg.sensor.basis = FourierBasis::parse(kv.get("sensor.basis"));
  cfg.sensor.learning_rate =
      kv.get_double("sensor.learning_rate", cfg.sensor.learning_rate);

  cfg.filter.particles = kv.get_int("filter.particles", cfg.filter.particles);
  cfg.filter.delta = kv.get_double("filter.delta", cfg.filter.delta);
  if (kv.has("filter.gain_basis"))
    cfg.filter.gain_basis = FourierBasis::parse(kv.get("filter.gain_basis"));

  LearningConfig& l = cfg.learning;
  l.gamma = kv.get_double("learning.gamma", l.gamma);
  l.epsilon = kv.get_double("learning.epsilon", l.epsilon);
  l.alpha = kv.get_double("learning.alpha", l.alpha);
  l.exploration_amplitude =
      kv.get_double("learning.exploration_amplitude", l.exploration_amplitude);
  l.dt = kv.get_double("learning.dt", l.dt);
  l.periods_per_episode =
      kv.get_int("learning.periods_per_episode", l.periods_per_episode);
  l.episodes = kv.get_int("learning.episodes", l.episodes);
  l.policy_clamp = kv.get_double("learning.policy_clamp", l.policy_clamp);
  const std::string turn = kv.get("learning.turn", "cw");
  if (turn == "cw")
    l.turn_sign = +1;
  else if (turn == "ccw")
    l.turn_sign = -1;
  else
    throw ConfigError("learning.turn must be cw or ccw");

  cfg.atlas.settle_periods =
      kv.get_int("atlas.settle_periods", cfg.atlas.settle_periods);
  cfg.atlas.samples = kv.get_int("atlas.samples", cfg.atlas.samples);

  cfg.seed = kv.get_u64("run.seed", cfg.seed);
  cfg.output_dir = kv.get("run.out", cfg.output_dir);

  kv.check_all_used();
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void save_config(const ExperimentConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << serialize_config(cfg);
}

}  // namespace serpent
