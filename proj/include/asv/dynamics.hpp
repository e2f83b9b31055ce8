#pragma once

#include "asv/common.hpp"

namespace asv::dyn {

constexpr double kRudderMax = 20.0 * kPi / 180.0;   // hard rudder limit
constexpr double kRudderIncrement = 5.0 * kPi / 180.0;
constexpr double kDefaultDt = 3.0;                  // environment step size [s]

/// Full kinematic state of one vessel. Pose in NED, velocities body-fixed.
struct ShipState {
  double x_n = 0.0;    // north [m]
  double y_n = 0.0;    // east [m]
  double psi = 0.0;    // heading [rad], clockwise from north
  double u = 0.0;      // surge speed [m/s]
  double v = 0.0;      // sway speed [m/s]
  double r_yaw = 0.0;  // yaw rate [rad/s]
  double delta = 0.0;  // rudder angle [rad], positive = starboard
  double rps = 0.0;    // propeller revolutions [1/s]

  Vec2 position() const { return Vec2(x_n, y_n); }
  /// Velocity over ground in NED coordinates.
  Vec2 ground_velocity() const;
  double total_speed() const { return std::sqrt(u * u + v * v); }
  /// Direction of the ground velocity; falls back to the heading at rest.
  double course() const;
};

struct ForceTriple {
  double X = 0.0;    // surge force [N]
  double Y = 0.0;    // sway force [N]
  double N_m = 0.0;  // yaw moment about midship [N m]
};

/// Hull/rudder/propeller coefficient set for a KVLCC2-class tanker,
/// loaded from a flat key-value file. Immutable after load.
struct HydroCoefficients {
  // principal particulars
  double rho, L_pp, draft, mass, x_G;
  double m_x, m_y;      // added masses [kg], derived from nondimensional input
  double I_zG, J_z;     // inertia about COG and added inertia [kg m^2]

  // hull force polynomial (nondimensional derivatives)
  double R0, X_vv, X_vr, X_rr, X_vvvv;
  double Y_v, Y_r, Y_vvv, Y_vvr, Y_vrr, Y_rrr;
  double N_v, N_r, N_vvv, N_vvr, N_vrr, N_rrr;

  // propeller
  double D_p, t_p, w_P0, k_0, k_1, k_2;

  // rudder
  double A_R, t_R, a_H, x_H, x_R, f_alpha;
  double eps_rudder, kappa_rudder, eta_rudder, l_R, gamma_R;

  static HydroCoefficients load(const std::string& path);
  static HydroCoefficients from_config(const KeyValueFile& kv);
};

/// Total X, Y, N as sums of hull, rudder, and propeller components.
ForceTriple forces(const ShipState& state, const HydroCoefficients& coeff);

struct Derivatives {
  Eigen::Vector3d pose_rates;      // (dx_n, dy_n, dpsi)
  Eigen::Vector3d velocity_rates;  // (du, dv, dr)
};

/// Solves the 3x3 rigid-body system for the accelerations and rotates the
/// body velocities into NED.
Derivatives derivatives(const ShipState& state, const HydroCoefficients& coeff);

/// One integrator step: rudder update + clip, Euler for the velocities,
/// trapezoidal for the pose. commanded_ddelta is the rudder increment for
/// this step (one of -5deg, 0, +5deg in the environment).
ShipState step(const ShipState& state, const HydroCoefficients& coeff,
               double commanded_ddelta, double dt = kDefaultDt);

/// Straight-running equilibrium speed u* with X(u*, v=0, r=0, delta=0) = 0,
/// found by bisection on [0.1, 15] m/s.
double steady_speed(double rps, const HydroCoefficients& coeff);

}  // namespace asv::dyn
