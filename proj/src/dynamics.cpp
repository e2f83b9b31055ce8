#include "asv/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace asv::dyn {

Vec2 ShipState::ground_velocity() const {
  const double c = std::cos(psi), s = std::sin(psi);
  return Vec2(u * c - v * s, u * s + v * c);
}

double ShipState::course() const {
  if (u == 0.0 && v == 0.0) return psi;
  const Vec2 vel = ground_velocity();
  return std::atan2(vel.y(), vel.x());
}

HydroCoefficients HydroCoefficients::load(const std::string& path) {
  return from_config(KeyValueFile::load(path));
}

HydroCoefficients HydroCoefficients::from_config(const KeyValueFile& kv) {
  HydroCoefficients c{};
  c.rho = kv.get_real("rho");
  c.L_pp = kv.get_real("L_pp");
  c.draft = kv.get_real("draft");
  c.mass = kv.get_real("mass");
  c.x_G = kv.get_real("x_G");

  // added masses and inertias enter the file nondimensionally
  const double q2 = 0.5 * c.rho * c.L_pp * c.L_pp * c.draft;
  const double q4 = 0.5 * c.rho * std::pow(c.L_pp, 4) * c.draft;
  c.m_x = kv.get_real("m_x_nd") * q2;
  c.m_y = kv.get_real("m_y_nd") * q2;
  c.J_z = kv.get_real("J_z_nd") * q4;
  const double k_zz = kv.get_real("k_zz");  // gyration radius / L_pp
  c.I_zG = c.mass * std::pow(k_zz * c.L_pp, 2);

  c.R0 = kv.get_real("R0");
  c.X_vv = kv.get_real("X_vv");
  c.X_vr = kv.get_real("X_vr");
  c.X_rr = kv.get_real("X_rr");
  c.X_vvvv = kv.get_real("X_vvvv");
  c.Y_v = kv.get_real("Y_v");
  c.Y_r = kv.get_real("Y_r");
  c.Y_vvv = kv.get_real("Y_vvv");
  c.Y_vvr = kv.get_real("Y_vvr");
  c.Y_vrr = kv.get_real("Y_vrr");
  c.Y_rrr = kv.get_real("Y_rrr");
  c.N_v = kv.get_real("N_v");
  c.N_r = kv.get_real("N_r");
  c.N_vvv = kv.get_real("N_vvv");
  c.N_vvr = kv.get_real("N_vvr");
  c.N_vrr = kv.get_real("N_vrr");
  c.N_rrr = kv.get_real("N_rrr");

  c.D_p = kv.get_real("D_p");
  c.t_p = kv.get_real("t_p");
  c.w_P0 = kv.get_real("w_P0");
  c.k_0 = kv.get_real("k_0");
  c.k_1 = kv.get_real("k_1");
  c.k_2 = kv.get_real("k_2");

  c.A_R = kv.get_real("A_R");
  c.t_R = kv.get_real("t_R");
  c.a_H = kv.get_real("a_H");
  c.x_H = kv.get_real("x_H_nd") * c.L_pp;
  c.x_R = kv.get_real("x_R_nd") * c.L_pp;
  c.f_alpha = kv.get_real("f_alpha");
  c.eps_rudder = kv.get_real("eps_rudder");
  c.kappa_rudder = kv.get_real("kappa_rudder");
  c.eta_rudder = kv.get_real("eta_rudder");
  c.l_R = kv.get_real("l_R_nd") * c.L_pp;
  c.gamma_R = kv.get_real("gamma_R");

  if (c.mass <= 0.0 || c.L_pp <= 0.0)
    throw ConfigError("coefficient file: mass and L_pp must be positive");
  if (c.m_x < 0.0 || c.m_y < 0.0)
    throw ConfigError("coefficient file: added masses must be nonnegative");
  return c;
}

namespace {

double thrust_coefficient(const HydroCoefficients& c, double J) {
  return c.k_0 + c.k_1 * J + c.k_2 * J * J;
}

}  // namespace

ForceTriple forces(const ShipState& s, const HydroCoefficients& c) {
  ForceTriple F{};

  // hull: polynomials in nondimensional sway velocity and yaw rate
  const double U = s.total_speed();
  if (U > 1e-9) {
    const double vp = s.v / U;
    const double rp = s.r_yaw * c.L_pp / U;
    const double qU = 0.5 * c.rho * c.L_pp * c.draft * U * U;
    F.X += qU * (-c.R0 + c.X_vv * vp * vp + c.X_vr * vp * rp + c.X_rr * rp * rp +
                 c.X_vvvv * vp * vp * vp * vp);
    F.Y += qU * (c.Y_v * vp + c.Y_r * rp + c.Y_vvv * vp * vp * vp +
                 c.Y_vvr * vp * vp * rp + c.Y_vrr * vp * rp * rp + c.Y_rrr * rp * rp * rp);
    F.N_m += qU * c.L_pp *
             (c.N_v * vp + c.N_r * rp + c.N_vvv * vp * vp * vp + c.N_vvr * vp * vp * rp +
              c.N_vrr * vp * rp * rp + c.N_rrr * rp * rp * rp);
  }

  // propeller: thrust-coefficient polynomial in the advance ratio
  double J = 0.0, K_T = 0.0;
  if (s.rps > 0.0) {
    J = s.u * (1.0 - c.w_P0) / (s.rps * c.D_p);
    K_T = thrust_coefficient(c, J);
    const double T = c.rho * s.rps * s.rps * std::pow(c.D_p, 4) * K_T;
    F.X += (1.0 - c.t_p) * T;
  }

  // rudder: normal force from the effective inflow at the rudder position
  double u_R = 0.0;
  const double u_prop = s.u * (1.0 - c.w_P0);
  if (s.rps > 0.0 && u_prop > 0.0 && J > 1e-9) {
    const double race = 1.0 + c.kappa_rudder *
                                  (std::sqrt(1.0 + 8.0 * K_T / (kPi * J * J)) - 1.0);
    u_R = c.eps_rudder * u_prop *
          std::sqrt(c.eta_rudder * race * race + (1.0 - c.eta_rudder));
  }
  const double v_R = c.gamma_R * (s.v + c.l_R * s.r_yaw);
  const double U_R2 = u_R * u_R + v_R * v_R;
  if (U_R2 > 0.0) {
    const double alpha_R = s.delta - std::atan2(v_R, std::max(u_R, 1e-9));
    const double F_N = 0.5 * c.rho * c.A_R * c.f_alpha * U_R2 * std::sin(alpha_R);
    F.X += -(1.0 - c.t_R) * F_N * std::sin(s.delta);
    F.Y += -(1.0 + c.a_H) * F_N * std::cos(s.delta);
    F.N_m += -(c.x_R + c.a_H * c.x_H) * F_N * std::cos(s.delta);
  }

  return F;
}

Derivatives derivatives(const ShipState& s, const HydroCoefficients& c) {
  const ForceTriple F = forces(s, c);

  Eigen::Matrix3d M = Eigen::Matrix3d::Zero();
  M(0, 0) = c.mass + c.m_x;
  M(1, 1) = c.mass + c.m_y;
  M(1, 2) = c.x_G * c.mass;
  M(2, 1) = c.x_G * c.mass;
  M(2, 2) = c.I_zG + c.x_G * c.x_G * c.mass + c.J_z;

  Eigen::Vector3d rhs;
  rhs << F.X + (c.mass + c.m_y) * s.v * s.r_yaw + c.x_G * c.mass * s.r_yaw * s.r_yaw,
      F.Y - (c.mass + c.m_x) * s.u * s.r_yaw,
      F.N_m - c.x_G * c.mass * s.u * s.r_yaw;

  Eigen::FullPivLU<Eigen::Matrix3d> lu(M);
  if (!lu.isInvertible())
    throw ConfigError("dynamics: singular mass matrix (check mass/inertia coefficients)");

  Derivatives d;
  d.velocity_rates = lu.solve(rhs);
  const double cp = std::cos(s.psi), sp = std::sin(s.psi);
  d.pose_rates << s.u * cp - s.v * sp, s.u * sp + s.v * cp, s.r_yaw;
  return d;
}

ShipState step(const ShipState& state, const HydroCoefficients& coeff,
               double commanded_ddelta, double dt) {
  ShipState s = state;
  s.delta = std::clamp(s.delta + commanded_ddelta, -kRudderMax, kRudderMax);

  const Derivatives d_old = derivatives(s, coeff);

  ShipState next = s;
  next.u = s.u + dt * d_old.velocity_rates(0);
  next.v = s.v + dt * d_old.velocity_rates(1);
  next.r_yaw = s.r_yaw + dt * d_old.velocity_rates(2);

  // trapezoidal pose update with old and new velocities at their headings
  next.psi = s.psi + 0.5 * dt * (s.r_yaw + next.r_yaw);
  const double c0 = std::cos(s.psi), s0 = std::sin(s.psi);
  const double c1 = std::cos(next.psi), s1 = std::sin(next.psi);
  next.x_n = s.x_n + 0.5 * dt * ((s.u * c0 - s.v * s0) + (next.u * c1 - next.v * s1));
  next.y_n = s.y_n + 0.5 * dt * ((s.u * s0 + s.v * c0) + (next.u * s1 + next.v * c1));
  return next;
}

double steady_speed(double rps, const HydroCoefficients& coeff) {
  if (rps <= 0.0) throw std::domain_error("steady_speed: rps must be positive");
  auto surge = [&](double u) {
    ShipState s;
    s.u = u;
    s.rps = rps;
    return forces(s, coeff).X;
  };
  double lo = 0.1, hi = 15.0;
  double flo = surge(lo), fhi = surge(hi);
  if (flo * fhi > 0.0)
    throw ConfigError("steady_speed: no sign change of X on [0.1, 15] m/s");
  for (int i = 0; i < 80 && hi - lo > 1e-12; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = surge(mid);
    if (flo * fm <= 0.0) {
      hi = mid;
      fhi = fm;
    } else {
      lo = mid;
      flo = fm;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace asv::dyn
