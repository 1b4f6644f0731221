#include "serpent/dynamics.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <cmath>
#include <numbers>

#include "serpent/fourier.hpp"

namespace serpent {

namespace {

Eigen::VectorXd ones(int n) { return Eigen::VectorXd::Ones(n); }

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError("RobotParams: " + msg);
}

}  // namespace

double RobotParams::period() const {
  return two_pi<double> / drive_frequency;
}

void RobotParams::validate() const {
  require(n >= 2, "need at least two links");
  require(mass.size() == n && half_length.size() == n && inertia.size() == n &&
              friction_tangent.size() == n && friction_normal.size() == n,
          "per-link vectors must have length n");
  require(spring.size() == n - 1 && joint_damping.size() == n - 1 &&
              torque_amplitude.size() == n - 1 && torque_phase.size() == n - 1,
          "per-joint vectors must have length n-1");
  require((mass.array() > 0).all(), "masses must be positive");
  require((half_length.array() > 0).all(), "half-lengths must be positive");
  require((inertia.array() > 0).all(), "inertias must be positive");
  require((friction_tangent.array() >= 0).all() &&
              (friction_normal.array() >= 0).all(),
          "friction coefficients must be nonnegative");
  require((friction_normal.array() > friction_tangent.array()).all(),
          "normal friction must exceed tangential friction on every link");
  require((spring.array() >= 0).all() && (joint_damping.array() >= 0).all(),
          "spring and damping coefficients must be nonnegative");
  require(drive_frequency > 0, "drive frequency must be positive");
}

Eigen::VectorXd serpenoid_phases(int n) {
  Eigen::VectorXd beta(n - 1);
  for (int j = 0; j < n - 1; ++j) beta[j] = j * two_pi<double> / n;
  return beta;
}

RobotParams RobotParams::five_link() {
  RobotParams p;
  p.n = 5;
  p.mass = ones(5);
  p.half_length = ones(5);
  p.inertia = Eigen::VectorXd::Constant(5, 1.0 / 3.0);
  p.friction_tangent = Eigen::VectorXd::Constant(5, 0.1);
  p.friction_normal = Eigen::VectorXd::Constant(5, 0.5);
  p.spring = Eigen::VectorXd::Constant(4, 3.0);
  p.joint_damping = Eigen::VectorXd::Constant(4, 0.1);
  p.torque_amplitude = (Eigen::VectorXd(4) << 2.0, 1.1, 1.0, 2.0).finished();
  p.torque_phase = serpenoid_phases(5);
  p.drive_frequency = 1.0;
  return p;
}

RobotState RobotState::rest(int n) {
  RobotState s;
  s.q = Eigen::VectorXd::Zero(n);
  s.qdot = Eigen::VectorXd::Zero(n);
  return s;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> difference_operator(int n) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n - 1, n);
  for (int j = 0; j < n - 1; ++j) {
    D(j, j) = 1.0;
    D(j, j + 1) = -1.0;
  }
  Eigen::MatrixXd gram = D * D.transpose();
  Eigen::MatrixXd D_plus = D.transpose() * gram.ldlt().solve(
                               Eigen::MatrixXd::Identity(n - 1, n - 1));
  return {D, D_plus};
}

namespace {

Eigen::MatrixXd pair_sum_operator(int n) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n - 1, n);
  for (int j = 0; j < n - 1; ++j) {
    A(j, j) = 1.0;
    A(j, j + 1) = 1.0;
  }
  return A;
}

}  // namespace

ChainOperators ChainOperators::build(const RobotParams& params) {
  const int n = params.n;
  ChainOperators ops;
  std::tie(ops.D, ops.D_plus) = difference_operator(n);
  ops.A = pair_sum_operator(n);
  const Eigen::VectorXd inv_m = params.mass.cwiseInverse();
  const Eigen::MatrixXd G = ops.D * inv_m.asDiagonal() * ops.D.transpose();
  const Eigen::MatrixXd AL = ops.A * params.half_length.asDiagonal();
  const Eigen::MatrixXd G_inv_AL = G.ldlt().solve(AL);
  ops.B = inv_m.asDiagonal() * ops.D.transpose() * G_inv_AL;
  ops.H = AL.transpose() * G_inv_AL;
  return ops;
}

Eigen::VectorXd shape_coordinates(const Eigen::VectorXd& q) {
  const int n = static_cast<int>(q.size());
  Eigen::VectorXd x(n - 1);
  for (int j = 0; j < n - 1; ++j) x[j] = q[j] - q[j + 1];
  return x;
}

double orientation(const Eigen::VectorXd& q) { return q.mean(); }

Eigen::VectorXd link_angles(const Eigen::VectorXd& x, double psi) {
  const int n = static_cast<int>(x.size()) + 1;
  auto [D, D_plus] = difference_operator(n);
  return D_plus * x + Eigen::VectorXd::Constant(n, psi);
}

Eigen::Matrix2d rotation(double psi) {
  Eigen::Matrix2d R;
  const double c = std::cos(psi), s = std::sin(psi);
  R << c, -s, s, c;
  return R;
}

Eigen::MatrixXd inertia_matrix(const Eigen::VectorXd& q,
                               const RobotParams& params) {
  const ChainOperators ops = ChainOperators::build(params);
  const int n = params.n;
  Eigen::MatrixXd I(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      I(i, j) = ops.H(i, j) * std::cos(q[i] - q[j]);
  I.diagonal() += params.inertia;
  return I;
}

Eigen::MatrixXd centrifugal_matrix(const Eigen::VectorXd& q,
                                   const RobotParams& params) {
  const ChainOperators ops = ChainOperators::build(params);
  const int n = params.n;
  Eigen::MatrixXd C(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      C(i, j) = ops.H(i, j) * std::sin(q[i] - q[j]);
  return C;
}

Eigen::VectorXd open_loop_torque(double t, const RobotParams& params) {
  return (params.torque_amplitude.array() *
          (params.drive_frequency * t + params.torque_phase.array()).sin())
      .matrix();
}

namespace {

// Shared assembly for the friction blocks; also used by the dynamics
// right-hand side so the matrices are built once per evaluation.
FrictionMatrices build_friction(const ChainOperators& ops,
                                const Eigen::VectorXd& q, double psi,
                                const RobotParams& params,
                                const ControlInput& u) {
  const int n = params.n;
  if (u.u.size() != n)
    throw InvalidControlError("control vector must have length n");
  for (int j = 0; j < n; ++j)
    if (1.0 + u.u[j] < 0.0)
      throw InvalidControlError(
          "control drives normal friction negative on link " +
          std::to_string(j + 1));

  const Eigen::ArrayXd c_n =
      params.friction_normal.array() * (1.0 + u.u.array());
  const Eigen::ArrayXd c_t = params.friction_tangent.array();
  const Eigen::ArrayXd m = params.mass.array();

  Eigen::MatrixXd B_s(n, n), B_c(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double d = q[i] - q[j];
      B_s(i, j) = ops.B(i, j) * std::sin(d);
      B_c(i, j) = ops.B(i, j) * std::cos(d);
    }

  const Eigen::ArrayXd cq = (q.array() - psi).cos();
  const Eigen::ArrayXd sq = (q.array() - psi).sin();

  const Eigen::VectorXd mct = (m * c_t).matrix();
  const Eigen::VectorXd mcn = (m * c_n).matrix();

  FrictionMatrices fm;
  fm.R_qq = B_s.transpose() * mct.asDiagonal() * B_s +
            B_c.transpose() * mcn.asDiagonal() * B_c;
  fm.R_qq.diagonal() += (c_n * params.inertia.array()).matrix();

  fm.R_qv.resize(n, 2);
  fm.R_qv.col(0) = B_s.transpose() * (mct.array() * cq).matrix() -
                   B_c.transpose() * (mcn.array() * sq).matrix();
  fm.R_qv.col(1) = B_s.transpose() * (mct.array() * sq).matrix() +
                   B_c.transpose() * (mcn.array() * cq).matrix();

  fm.R_vv(0, 0) = (cq * mct.array() * cq + sq * mcn.array() * sq).sum();
  fm.R_vv(1, 1) = (sq * mct.array() * sq + cq * mcn.array() * cq).sum();
  fm.R_vv(0, 1) = fm.R_vv(1, 0) =
      (sq * (mct.array() - mcn.array()) * cq).sum();
  return fm;
}

struct GroupSolve {
  double psi_dot;
  Eigen::Vector2d v;  // body-frame CM velocity
};

// Solves the quasi-static 3x3 balance for (psi_dot, v) given xdot.
GroupSolve solve_group(const FrictionMatrices& fm, const ChainOperators& ops,
                       const Eigen::VectorXd& xdot) {
  const Eigen::VectorXd e = Eigen::VectorXd::Ones(fm.R_qq.rows());
  const Eigen::VectorXd Rqq_e = fm.R_qq * e;

  Eigen::Matrix3d G;
  G(0, 0) = e.dot(Rqq_e);
  G.block<1, 2>(0, 1) = (e.transpose() * fm.R_qv);
  G.block<2, 1>(1, 0) = fm.R_qv.transpose() * e;
  G.block<2, 2>(1, 1) = fm.R_vv;

  Eigen::PartialPivLU<Eigen::Matrix3d> lu(G);
  if (!(lu.rcond() > 1e-12))
    throw SingularFrictionBlockError(
        "quasi-static friction block is numerically singular (cond > 1e12)");

  const Eigen::VectorXd qdot_shape = ops.D_plus * xdot;
  Eigen::Vector3d rhs;
  rhs[0] = -Rqq_e.dot(qdot_shape);
  rhs.tail<2>() = -(fm.R_qv.transpose() * qdot_shape);

  const Eigen::Vector3d sol = lu.solve(rhs);
  return {sol[0], sol.tail<2>()};
}

// Time derivative of the reduced state (x, xdot, psi, r_cm).
struct ReducedRates {
  Eigen::VectorXd xdot, xddot;
  double psi_dot;
  Eigen::Vector2d r_cm_dot;
};

ReducedRates reduced_rates(const ChainOperators& ops, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& xdot, double psi, double t,
                           const ControlInput& u, const RobotParams& params) {
  const Eigen::VectorXd q =
      ops.D_plus * x + Eigen::VectorXd::Constant(params.n, psi);
  const FrictionMatrices fm = build_friction(ops, q, psi, params, u);
  const GroupSolve g = solve_group(fm, ops, xdot);

  const Eigen::VectorXd qdot =
      ops.D_plus * xdot + Eigen::VectorXd::Constant(params.n, g.psi_dot);

  Eigen::MatrixXd I(params.n, params.n);
  Eigen::MatrixXd C(params.n, params.n);
  for (int i = 0; i < params.n; ++i)
    for (int j = 0; j < params.n; ++j) {
      const double d = q[i] - q[j];
      I(i, j) = ops.H(i, j) * std::cos(d);
      C(i, j) = ops.H(i, j) * std::sin(d);
    }
  I.diagonal() += params.inertia;

  const Eigen::VectorXd tau = open_loop_torque(t, params);
  const Eigen::VectorXd joint_torque = tau -
                                       params.spring.asDiagonal() * x -
                                       params.joint_damping.asDiagonal() * xdot;

  Eigen::VectorXd rhs = ops.D.transpose() * joint_torque -
                        C * qdot.array().square().matrix() - fm.R_qq * qdot -
                        fm.R_qv * g.v;

  Eigen::LLT<Eigen::MatrixXd> llt(I);
  if (llt.info() != Eigen::Success)
    throw NumericalError("inertia matrix not positive definite");

  ReducedRates rates;
  rates.xdot = xdot;
  rates.xddot = ops.D * llt.solve(rhs);
  rates.psi_dot = g.psi_dot;
  rates.r_cm_dot = rotation(psi) * g.v;
  return rates;
}

}  // namespace

FrictionMatrices friction_matrices(const Eigen::VectorXd& q, double psi,
                                   const RobotParams& params,
                                   const ControlInput& u) {
  return build_friction(ChainOperators::build(params), q, psi, params, u);
}

GroupVelocity group_velocity(const RobotState& state,
                             const Eigen::VectorXd& xdot,
                             const ControlInput& u,
                             const RobotParams& params) {
  const ChainOperators ops = ChainOperators::build(params);
  const double psi = orientation(state.q);
  const FrictionMatrices fm = build_friction(ops, state.q, psi, params, u);
  const GroupSolve g = solve_group(fm, ops, xdot);
  return {g.psi_dot, rotation(psi) * g.v};
}

Eigen::VectorXd shape_acceleration(const RobotState& state,
                                   const Eigen::VectorXd& tau,
                                   const ControlInput& u,
                                   const RobotParams& params) {
  const ChainOperators ops = ChainOperators::build(params);
  const Eigen::VectorXd x = shape_coordinates(state.q);
  const Eigen::VectorXd xdot = shape_coordinates(state.qdot);
  const double psi = orientation(state.q);

  const FrictionMatrices fm = build_friction(ops, state.q, psi, params, u);
  const GroupSolve g = solve_group(fm, ops, xdot);
  const Eigen::VectorXd qdot =
      ops.D_plus * xdot + Eigen::VectorXd::Constant(params.n, g.psi_dot);

  const Eigen::MatrixXd I = inertia_matrix(state.q, params);
  const Eigen::MatrixXd C = centrifugal_matrix(state.q, params);
  const Eigen::VectorXd joint_torque = tau -
                                       params.spring.asDiagonal() * x -
                                       params.joint_damping.asDiagonal() * xdot;
  const Eigen::VectorXd rhs = ops.D.transpose() * joint_torque -
                              C * qdot.array().square().matrix() -
                              fm.R_qq * qdot - fm.R_qv * g.v;
  return ops.D * I.llt().solve(rhs);
}

RobotState step(const RobotState& state, const ControlInput& u,
                const RobotParams& params, double dt) {
  if (!(dt > 0)) throw NumericalError("step: dt must be positive");
  if (!state.q.allFinite() || !state.qdot.allFinite() ||
      !state.r_cm.allFinite() || !std::isfinite(state.t))
    throw NonFiniteError("state left the finite range at t = " +
                         std::to_string(state.t));
  const ChainOperators ops = ChainOperators::build(params);

  const Eigen::VectorXd x0 = shape_coordinates(state.q);
  const Eigen::VectorXd v0 = shape_coordinates(state.qdot);
  const double psi0 = orientation(state.q);

  struct Stage {
    Eigen::VectorXd dx, dv;
    double dpsi;
    Eigen::Vector2d dr;
  };
  auto eval = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& v,
                  double psi, double t) {
    ReducedRates r = reduced_rates(ops, x, v, psi, t, u, params);
    return Stage{r.xdot, r.xddot, r.psi_dot, r.r_cm_dot};
  };

  const double h = dt;
  const Stage k1 = eval(x0, v0, psi0, state.t);
  const Stage k2 = eval(x0 + 0.5 * h * k1.dx, v0 + 0.5 * h * k1.dv,
                        psi0 + 0.5 * h * k1.dpsi, state.t + 0.5 * h);
  const Stage k3 = eval(x0 + 0.5 * h * k2.dx, v0 + 0.5 * h * k2.dv,
                        psi0 + 0.5 * h * k2.dpsi, state.t + 0.5 * h);
  const Stage k4 = eval(x0 + h * k3.dx, v0 + h * k3.dv, psi0 + h * k3.dpsi,
                        state.t + h);

  const Eigen::VectorXd x1 =
      x0 + (h / 6.0) * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
  const Eigen::VectorXd v1 =
      v0 + (h / 6.0) * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv);
  const double psi1 =
      psi0 + (h / 6.0) * (k1.dpsi + 2.0 * k2.dpsi + 2.0 * k3.dpsi + k4.dpsi);
  const Eigen::Vector2d r1 =
      state.r_cm + (h / 6.0) * (k1.dr + 2.0 * k2.dr + 2.0 * k3.dr + k4.dr);

  RobotState next;
  next.t = state.t + h;
  next.q = ops.D_plus * x1 + Eigen::VectorXd::Constant(params.n, psi1);
  const FrictionMatrices fm =
      build_friction(ops, next.q, psi1, params, u);
  const GroupSolve g1 = solve_group(fm, ops, v1);
  next.qdot = ops.D_plus * v1 + Eigen::VectorXd::Constant(params.n, g1.psi_dot);
  next.r_cm = r1;

  if (!next.q.allFinite() || !next.qdot.allFinite() || !next.r_cm.allFinite())
    throw NonFiniteError("state left the finite range at t = " +
                         std::to_string(next.t));
  return next;
}

Energy total_energy(const RobotState& state, const RobotParams& params) {
  const Eigen::VectorXd x = shape_coordinates(state.q);
  const Eigen::VectorXd xdot = shape_coordinates(state.qdot);
  const GroupVelocity g =
      group_velocity(state, xdot, ControlInput::zero(params.n), params);

  Energy e;
  const Eigen::MatrixXd I = inertia_matrix(state.q, params);
  e.kinetic = 0.5 * params.total_mass() * g.r_cm_dot.squaredNorm() +
              0.5 * state.qdot.dot(I * state.qdot);
  e.potential = 0.5 * (params.spring.array() * x.array().square()).sum();
  return e;
}

std::string trajectory_header(int n) {
  std::string h = "t";
  for (int j = 1; j <= n; ++j) h += ",q" + std::to_string(j);
  for (int j = 1; j <= n; ++j) h += ",qdot" + std::to_string(j);
  for (int j = 1; j < n; ++j) h += ",x" + std::to_string(j);
  h += ",psi,xcm,ycm";
  return h;
}

}  // namespace serpent
