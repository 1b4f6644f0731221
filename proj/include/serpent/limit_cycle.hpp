#ifndef SERPENT_LIMIT_CYCLE_HPP
#define SERPENT_LIMIT_CYCLE_HPP

#include <Eigen/Core>
#include <string>
#include <utility>
#include <vector>

#include "serpent/dynamics.hpp"

namespace serpent {

// Tabulated phase parametrization of one joint's nominal periodic orbit in
// the (x_j, xdot_j) plane.
struct JointCycle {
  Eigen::VectorXd x;     // K samples
  Eigen::VectorXd xdot;  // K samples
};

// Per-joint phase atlas of the nominal gait.  Samples sit at uniform
// phases theta_k = 2*pi*k/K; theta = 0 is the upward zero-crossing of x_1,
// and all joints share that time origin so their relative offsets are
// preserved.
struct LimitCycleAtlas {
  std::vector<JointCycle> joints;  // size n-1
  double period = 0.0;             // [s]
  double omega0 = 0.0;             // [rad/s]
  // Drive phase omega0*t mod 2*pi at the theta = 0 origin.  The orbit is
  // entrained to the forcing, so rebuilding a dynamically consistent
  // state at phase theta requires a clock with
  // omega0*t = origin_forcing_phase + theta (mod 2*pi).
  double origin_forcing_phase = 0.0;

  int samples() const {
    return joints.empty() ? 0 : static_cast<int>(joints.front().x.size());
  }
  int joint_count() const { return static_cast<int>(joints.size()); }

  // Checks uniform phase coverage, period*omega0 = 2*pi, and closure of
  // every tabulated curve; throws NumericalError on violation.
  void validate() const;

  // One CSV per joint: metadata lines (period, omega0, K) then
  // "theta,x,xdot" rows.  Files are named <prefix>_joint<j>.csv.
  void save_csv(const std::string& prefix) const;
  static LimitCycleAtlas load_csv(const std::string& prefix, int joint_count);
};

// Simulates the open-loop gait until the shape trajectory settles onto a
// closed orbit, then tabulates one period at K uniform phases.  Throws
// NoLimitCycleError if the orbit-closure residual exceeds 1e-2.
LimitCycleAtlas find_limit_cycle(const RobotParams& params, int settle_periods,
                                 int samples_per_period, double dt = 0.02);

// Point on joint j's orbit at phase theta (periodic linear interpolation).
std::pair<double, double> point_of(double theta, int joint,
                                   const LimitCycleAtlas& atlas);

// Phase of the orbit point nearest to (x, xdot) in the (x, xdot/omega0)
// scaled plane; coarse search over the table followed by projection onto
// the adjacent segments.
double phase_of(double x, double xdot, int joint,
                const LimitCycleAtlas& atlas);

}  // namespace serpent

#endif  // SERPENT_LIMIT_CYCLE_HPP
