#ifndef SERPENT_CONFIG_HPP
#define SERPENT_CONFIG_HPP

#include <cstdint>
#include <string>

#include "serpent/dynamics.hpp"
#include "serpent/qlearning.hpp"
#include "serpent/sensor.hpp"

namespace serpent {

// Per-joint filter settings.
struct FilterConfig {
  int particles = 100;   // N
  double delta = 0.05;   // frequency heterogeneity half-width [rad/s]
  FourierBasis gain_basis = FourierBasis::parse("sin1,cos1,sin2,cos2");

  bool operator==(const FilterConfig&) const = default;
};

// Atlas extraction settings.
struct AtlasConfig {
  int settle_periods = 50;
  int samples = 256;  // K

  bool operator==(const AtlasConfig&) const = default;
};

// Everything one experiment needs.  Serialized as flat sectioned
// key-value text; see docs in README or `serialize_config`.
struct ExperimentConfig {
  RobotParams robot = RobotParams::five_link();
  SensorConfig sensor;
  FilterConfig filter;
  LearningConfig learning;
  AtlasConfig atlas;
  std::uint64_t seed = 0;
  std::string output_dir = "out";

  void validate() const;
};

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

std::string serialize_config(const ExperimentConfig& cfg);
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
void save_config(const ExperimentConfig& cfg, const std::string& path);

}  // namespace serpent

#endif  // SERPENT_CONFIG_HPP
