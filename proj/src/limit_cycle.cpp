#include "serpent/limit_cycle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "serpent/csv.hpp"
#include "serpent/fourier.hpp"

namespace serpent {

void LimitCycleAtlas::validate() const {
  if (joints.empty()) throw NumericalError("atlas: no joints");
  if (std::abs(period * omega0 - two_pi<double>) > 1e-6)
    throw NumericalError("atlas: period * omega0 != 2*pi");
  const int K = samples();
  if (K < 8) throw NumericalError("atlas: too few samples");
  for (const auto& jc : joints) {
    if (jc.x.size() != K || jc.xdot.size() != K)
      throw NumericalError("atlas: ragged sample tables");
    // closedness: the last knot must continue smoothly into the first
    const double span_x = jc.x.maxCoeff() - jc.x.minCoeff();
    const double gap = std::hypot(jc.x[K - 1] - jc.x[0],
                                  (jc.xdot[K - 1] - jc.xdot[0]) / omega0);
    const double knot_scale =
        std::max(1e-12, span_x) * (two_pi<double> / K) * 4.0;
    if (gap > std::max(0.05 * span_x, knot_scale))
      throw NumericalError("atlas: tabulated curve is not closed");
  }
}

void LimitCycleAtlas::save_csv(const std::string& prefix) const {
  const int K = samples();
  for (int j = 0; j < joint_count(); ++j) {
    CsvWriter csv(prefix + "_joint" + std::to_string(j + 1) + ".csv",
                  "theta,x,xdot",
                  {"period=" + format_double(period),
                   "omega0=" + format_double(omega0),
                   "K=" + std::to_string(K),
                   "origin_forcing_phase=" + format_double(origin_forcing_phase)});
    for (int k = 0; k < K; ++k) {
      csv.begin_row();
      csv.field(two_pi<double> * k / K);
      csv.field(joints[j].x[k]);
      csv.field(joints[j].xdot[k]);
      csv.end_row();
    }
  }
}

LimitCycleAtlas LimitCycleAtlas::load_csv(const std::string& prefix,
                                          int joint_count) {
  LimitCycleAtlas atlas;
  for (int j = 0; j < joint_count; ++j) {
    CsvTable table = CsvTable::load(prefix + "_joint" + std::to_string(j + 1) +
                                    ".csv");
    JointCycle jc;
    const int K = static_cast<int>(table.rows.size());
    jc.x.resize(K);
    jc.xdot.resize(K);
    for (int k = 0; k < K; ++k) {
      jc.x[k] = table.rows[k][1];
      jc.xdot[k] = table.rows[k][2];
    }
    for (const auto& meta : table.metadata) {
      const auto eq = meta.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = meta.substr(0, eq);
      const double value = std::strtod(meta.c_str() + eq + 1, nullptr);
      if (key == "period") atlas.period = value;
      if (key == "omega0") atlas.omega0 = value;
      if (key == "origin_forcing_phase") atlas.origin_forcing_phase = value;
    }
    atlas.joints.push_back(std::move(jc));
  }
  atlas.validate();
  return atlas;
}

namespace {

Eigen::VectorXd shape_state(const RobotState& s) {
  const Eigen::VectorXd x = shape_coordinates(s.q);
  const Eigen::VectorXd v = shape_coordinates(s.qdot);
  Eigen::VectorXd out(x.size() + v.size());
  out << x, v;
  return out;
}

// Integrates from `state` over `duration` in `steps` equal RK4 steps.
RobotState advance(RobotState state, double duration, int steps,
                   const RobotParams& params, const ControlInput& u) {
  const double h = duration / steps;
  for (int i = 0; i < steps; ++i) state = step(state, u, params, h);
  return state;
}

}  // namespace

LimitCycleAtlas find_limit_cycle(const RobotParams& params, int settle_periods,
                                 int samples_per_period, double dt) {
  params.validate();
  if (settle_periods < 1)
    throw ConfigError("find_limit_cycle: settle_periods must be >= 1");
  if (samples_per_period < 8)
    throw ConfigError("find_limit_cycle: need at least 8 samples per period");

  const double T = params.period();
  const int steps_per_period = std::max(8, static_cast<int>(std::lround(T / dt)));
  const ControlInput u0 = ControlInput::zero(params.n);

  RobotState state = RobotState::rest(params.n);
  for (int p = 0; p < settle_periods; ++p)
    state = advance(state, T, steps_per_period, params, u0);

  // closure residual over one more period
  const Eigen::VectorXd before = shape_state(state);
  RobotState after_one = advance(state, T, steps_per_period, params, u0);
  const double residual = (shape_state(after_one) - before).norm();
  if (residual > 1e-2)
    throw NoLimitCycleError(
        "shape trajectory did not close onto a periodic orbit (residual " +
        format_double(residual) + " > 0.01); Assumption of an attracting "
        "limit cycle fails for these parameters");

  // locate the upward zero-crossing of x_1 in the settled period
  const int scan_sub = 4;
  const double h_scan = T / (steps_per_period * scan_sub);
  RobotState scan = state;
  RobotState bracket_lo = scan;
  bool found = false;
  for (int i = 0; i < steps_per_period * scan_sub + scan_sub; ++i) {
    RobotState nxt = step(scan, u0, params, h_scan);
    const double x1_a = scan.q[0] - scan.q[1];
    const double x1_b = nxt.q[0] - nxt.q[1];
    const double v1_b = nxt.qdot[0] - nxt.qdot[1];
    if (x1_a <= 0.0 && x1_b > 0.0 && v1_b > 0.0) {
      bracket_lo = scan;
      found = true;
      break;
    }
    scan = nxt;
  }
  if (!found)
    throw NoLimitCycleError("no upward zero-crossing of x_1 on the orbit");

  // bisect inside the bracketing step for the phase origin
  double lo = 0.0, hi = h_scan;
  for (int it = 0; it < 60 && (hi - lo) > 1e-14; ++it) {
    const double mid = 0.5 * (lo + hi);
    RobotState probe = step(bracket_lo, u0, params, mid);
    ((probe.q[0] - probe.q[1]) > 0.0 ? hi : lo) = mid;
  }
  RobotState origin = hi > 0.0 ? step(bracket_lo, u0, params, hi) : bracket_lo;

  // tabulate one period from the origin at K uniform phases
  const int K = samples_per_period;
  const int sub = std::max(2, static_cast<int>(
                                  std::ceil(T / K / dt)) * 2);
  LimitCycleAtlas atlas;
  atlas.period = T;
  atlas.omega0 = params.drive_frequency;
  atlas.origin_forcing_phase =
      wrap_two_pi(params.drive_frequency * origin.t);
  atlas.joints.resize(params.n - 1);
  for (auto& jc : atlas.joints) {
    jc.x.resize(K);
    jc.xdot.resize(K);
  }
  RobotState s = origin;
  for (int k = 0; k < K; ++k) {
    const Eigen::VectorXd x = shape_coordinates(s.q);
    const Eigen::VectorXd v = shape_coordinates(s.qdot);
    for (int j = 0; j < params.n - 1; ++j) {
      atlas.joints[j].x[k] = x[j];
      atlas.joints[j].xdot[k] = v[j];
    }
    s = advance(s, T / K, sub, params, u0);
  }
  atlas.validate();
  return atlas;
}

std::pair<double, double> point_of(double theta, int joint,
                                   const LimitCycleAtlas& atlas) {
  const int K = atlas.samples();
  const double pos = wrap_two_pi(theta) / (two_pi<double> / K);
  const int k0 = static_cast<int>(pos) % K;
  const int k1 = (k0 + 1) % K;
  const double s = pos - static_cast<int>(pos);
  const JointCycle& jc = atlas.joints[joint];
  return {(1.0 - s) * jc.x[k0] + s * jc.x[k1],
          (1.0 - s) * jc.xdot[k0] + s * jc.xdot[k1]};
}

double phase_of(double x, double xdot, int joint,
                const LimitCycleAtlas& atlas) {
  const int K = atlas.samples();
  const JointCycle& jc = atlas.joints[joint];
  const double w = 1.0 / atlas.omega0;

  // coarse pass over the knots
  int best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (int k = 0; k < K; ++k) {
    const double dx = jc.x[k] - x;
    const double dv = (jc.xdot[k] - xdot) * w;
    const double d2 = dx * dx + dv * dv;
    if (d2 < best_d2) {
      best_d2 = d2;
      best = k;
    }
  }

  // refine by projecting onto the two segments adjacent to the best knot
  const double dtheta = two_pi<double> / K;
  double best_theta = best * dtheta;
  for (int seg : {(best + K - 1) % K, best}) {
    const int a = seg, b = (seg + 1) % K;
    const Eigen::Vector2d P(jc.x[a], jc.xdot[a] * w);
    const Eigen::Vector2d Q(jc.x[b], jc.xdot[b] * w);
    const Eigen::Vector2d p(x, xdot * w);
    const Eigen::Vector2d d = Q - P;
    const double len2 = d.squaredNorm();
    double s = len2 > 0.0 ? (p - P).dot(d) / len2 : 0.0;
    s = std::clamp(s, 0.0, 1.0);
    const double d2 = (P + s * d - p).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best_theta = a * dtheta + s * dtheta;
    }
  }
  return wrap_two_pi(best_theta);
}

}  // namespace serpent
