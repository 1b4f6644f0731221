#ifndef SERPENT_DYNAMICS_HPP
#define SERPENT_DYNAMICS_HPP

#include <Eigen/Core>
#include <string>
#include <utility>

#include "serpent/errors.hpp"

namespace serpent {

// Physical and actuation constants of the planar n-link chain.
//
// Friction is anisotropic: each link sees viscous-like ground friction
// with tangential coefficient friction_tangent[j] and nominal normal
// coefficient friction_normal[j]; forward locomotion needs
// friction_normal > friction_tangent.  Joints carry torsional springs,
// viscous dampers and sinusoidal drive torques.
struct RobotParams {
  int n = 0;                          // link count, >= 2
  Eigen::VectorXd mass;               // m_j [kg], length n
  Eigen::VectorXd half_length;        // l_j [m], length n
  Eigen::VectorXd inertia;            // J_j [kg m^2], length n
  Eigen::VectorXd friction_tangent;   // c_t,j [1/s], length n
  Eigen::VectorXd friction_normal;    // nominal c_n,j [1/s], length n
  Eigen::VectorXd spring;             // kappa_j [N m/rad], length n-1
  Eigen::VectorXd joint_damping;      // zeta_j [N m s/rad], length n-1
  Eigen::VectorXd torque_amplitude;   // tau0_j [N m], length n-1
  Eigen::VectorXd torque_phase;       // beta_j [rad], length n-1
  double drive_frequency = 1.0;       // omega0 [rad/s]

  double total_mass() const { return mass.sum(); }
  double period() const;  // 2*pi / omega0

  // Throws ConfigError if any invariant fails (positive masses, lengths,
  // inertias; normal friction exceeding tangential; joint vectors of
  // length n-1).
  void validate() const;

  // The 5-link benchmark chain: unit masses and half-lengths, J = 1/3,
  // c_t = 0.1, c_n = 0.5, kappa = 3, zeta = 0.1, tau0 = (2.0,1.1,1.0,2.0),
  // omega0 = 1, with traveling-wave torque phases beta_j = (j-1)*2*pi/n.
  static RobotParams five_link();
};

// Default traveling-wave torque phasing beta_j = (j-1) * 2*pi/n.
Eigen::VectorXd serpenoid_phases(int n);

// Absolute link angles, their rates, and the center of mass.  Angles are
// kept unwrapped so the global orientation can accumulate net rotation.
struct RobotState {
  Eigen::VectorXd q;     // absolute link angles [rad], length n
  Eigen::VectorXd qdot;  // [rad/s], length n
  Eigen::Vector2d r_cm = Eigen::Vector2d::Zero();  // [m]
  double t = 0.0;        // [s]

  static RobotState rest(int n);
};

// Per-link normal-friction perturbation: c_n,j -> c_n,j * (1 + u_j).
// Zero effective friction (u_j = -1) is admissible; anything below is not.
struct ControlInput {
  Eigen::VectorXd u;  // dimensionless, length n

  static ControlInput zero(int n) { return {Eigen::VectorXd::Zero(n)}; }
};

// Configuration-dependent damping blocks of the friction model, expressed
// in the body frame (group velocity v = R(psi)^T rdot_cm).
struct FrictionMatrices {
  Eigen::MatrixXd R_qq;  // n x n
  Eigen::MatrixXd R_qv;  // n x 2
  Eigen::Matrix2d R_vv;  // 2 x 2
};

// Constant chain operators derived from the parameters alone.
struct ChainOperators {
  Eigen::MatrixXd D;       // (n-1) x n pairwise difference
  Eigen::MatrixXd D_plus;  // n x (n-1) right pseudo-inverse of D
  Eigen::MatrixXd A;       // (n-1) x n pairwise sum
  Eigen::MatrixXd B;       // n x n, link positions from angles
  Eigen::MatrixXd H;       // n x n, angle-angle inertia coupling

  static ChainOperators build(const RobotParams& params);
};

// -- Kinematic maps -------------------------------------------------------

// Pairwise difference operator D ((n-1) x n, [Dx]_j = x_j - x_{j+1}) and
// its right pseudo-inverse D^+ = D^T (D D^T)^{-1}.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> difference_operator(int n);

// Shape coordinates x = D q (relative joint angles).
Eigen::VectorXd shape_coordinates(const Eigen::VectorXd& q);

// Global orientation psi = mean(q).
double orientation(const Eigen::VectorXd& q);

// q = D^+ x + e psi.
Eigen::VectorXd link_angles(const Eigen::VectorXd& x, double psi);

Eigen::Matrix2d rotation(double psi);

// -- Model matrices -------------------------------------------------------

// Inertia matrix I(q)_{ij} = H_{ij} cos(q_i - q_j) + J_{ij}; symmetric
// positive definite for valid parameters.
Eigen::MatrixXd inertia_matrix(const Eigen::VectorXd& q,
                               const RobotParams& params);

// Centrifugal coupling C(q)_{ij} = H_{ij} sin(q_i - q_j), applied to the
// elementwise square of qdot.
Eigen::MatrixXd centrifugal_matrix(const Eigen::VectorXd& q,
                                   const RobotParams& params);

// Joint drive tau_j(t) = tau0_j sin(omega0 t + beta_j), length n-1.
Eigen::VectorXd open_loop_torque(double t, const RobotParams& params);

// Friction damping blocks at configuration (q, psi) under control u.
// Throws InvalidControlError if any 1 + u_j < 0.
FrictionMatrices friction_matrices(const Eigen::VectorXd& q, double psi,
                                   const RobotParams& params,
                                   const ControlInput& u);

// -- Reduced dynamics -----------------------------------------------------

struct GroupVelocity {
  double psi_dot = 0.0;
  Eigen::Vector2d r_cm_dot = Eigen::Vector2d::Zero();
};

// Quasi-static group velocity: solves the 3x3 friction balance
//   [e^T R_qq e  e^T R_qv] [psi_dot]     [e^T R_qq]
//   [R_vq e      R_vv    ] [v      ] = - [R_vq    ] D^+ xdot
// and returns (psi_dot, rdot_cm = R(psi) v).  Throws
// SingularFrictionBlockError when the block is numerically singular.
GroupVelocity group_velocity(const RobotState& state,
                             const Eigen::VectorXd& xdot,
                             const ControlInput& u,
                             const RobotParams& params);

// Shape acceleration
//   xddot = (D I^-1 D^T)(tau - kappa x - zeta xdot)
//         + D I^-1 (-C(q) qdot^2 - R_qq qdot - R_qv v)
// with qdot = D^+ xdot + e psi_dot and (psi_dot, v) from the quasi-static
// group balance.
Eigen::VectorXd shape_acceleration(const RobotState& state,
                                   const Eigen::VectorXd& tau,
                                   const ControlInput& u,
                                   const RobotParams& params);

// One classical RK4 step of size dt on the reduced state
// (x, xdot, psi, r_cm) with the open-loop drive torque; reconstructs the
// full link state afterwards.  Throws NonFiniteError if the state leaves
// the finite range.
RobotState step(const RobotState& state, const ControlInput& u,
                const RobotParams& params, double dt);

struct Energy {
  double kinetic = 0.0;    // [J]
  double potential = 0.0;  // [J]
  double total() const { return kinetic + potential; }
};

// Kinetic and spring energy of the state.  The center-of-mass velocity is
// reconstructed through the zero-control quasi-static balance.
Energy total_energy(const RobotState& state, const RobotParams& params);

// -- Trajectory export ----------------------------------------------------

// Header "t,q1..qn,qdot1..qdotn,x1..x{n-1},psi,xcm,ycm" expanded for n.
std::string trajectory_header(int n);

}  // namespace serpent

#endif  // SERPENT_DYNAMICS_HPP
