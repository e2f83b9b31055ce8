#include "asv/baselines.hpp"

#include "asv/geo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace asv::baselines {

namespace {

Vec2 heading_vector(double psi) { return Vec2(std::cos(psi), std::sin(psi)); }

/// z-component of the planar cross product in NED; positive when `b` lies
/// clockwise (to starboard) of `a`.
double cross_z(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

risk::Kinematics2D with_velocity(const Vec2& pos, const Vec2& vel) { return {pos, vel}; }

}  // namespace

double limit_turn(double psi, double desired, double max_delta) {
  const double delta = geo::clip_angle(desired - psi, -kPi);
  return geo::clip_angle(psi + std::clamp(delta, -max_delta, max_delta), 0.0);
}

ApfConfig ApfConfig::from_config(const KeyValueFile& kv) {
  kv.require_known({"eta_e", "d_safe", "attractive_gain", "repulsive_gain",
                    "engagement_factor", "bias_deg"});
  ApfConfig cfg;
  cfg.eta_e = kv.get_real("eta_e", cfg.eta_e);
  cfg.d_safe = kv.get_real("d_safe", cfg.d_safe);
  cfg.attractive_gain = kv.get_real("attractive_gain", cfg.attractive_gain);
  cfg.repulsive_gain = kv.get_real("repulsive_gain", cfg.repulsive_gain);
  cfg.engagement_factor = kv.get_real("engagement_factor", cfg.engagement_factor);
  cfg.bias_deg = kv.get_real("bias_deg", cfg.bias_deg);
  if (cfg.eta_e <= 0.0 || cfg.d_safe <= 0.0 || cfg.attractive_gain <= 0.0 ||
      cfg.repulsive_gain <= 0.0)
    throw ConfigError("apf config: scaling factors and gains must be positive");
  if (cfg.engagement_factor <= 1.0)
    throw ConfigError("apf config: engagement_factor must exceed 1");
  return cfg;
}

ApfConfig ApfConfig::load(const std::string& path) {
  return from_config(KeyValueFile::load(path));
}

double apf_heading(const ApfConfig& cfg, const dyn::ShipState& os,
                   const std::vector<dyn::ShipState>& ts_list, const Vec2& goal) {
  Vec2 force = cfg.attractive_gain * (goal - os.position());

  const double bias = deg2rad(cfg.bias_deg);
  const Eigen::Matrix2d rot{{std::cos(bias), -std::sin(bias)},
                            {std::sin(bias), std::cos(bias)}};
  const double engagement = cfg.engagement_factor * cfg.d_safe;
  for (const auto& ts : ts_list) {
    const Vec2 away = os.position() - ts.position();
    const double d = away.norm();
    if (d <= 0.0 || d >= engagement) continue;
    double magnitude = cfg.repulsive_gain * (1.0 / d - 1.0 / engagement) / (d * d);
    if (d < cfg.d_safe) magnitude *= cfg.eta_e;
    force += rot * (magnitude / d * away);
  }

  if (force.norm() < 1e-12) return os.psi;
  return limit_turn(os.psi, std::atan2(force.y(), force.x()));
}

VoConfig VoConfig::from_config(const KeyValueFile& kv) {
  kv.require_known({"t_max", "d_min", "n_h", "candidates", "cone_radius"});
  VoConfig cfg;
  cfg.t_max = kv.get_real("t_max", cfg.t_max);
  cfg.d_min = kv.get_real("d_min", cfg.d_min);
  cfg.n_h = static_cast<int>(kv.get_int("n_h", cfg.n_h));
  cfg.candidates = static_cast<int>(kv.get_int("candidates", cfg.candidates));
  cfg.cone_radius = kv.get_real("cone_radius", cfg.cone_radius);
  if (cfg.t_max <= 0.0 || cfg.d_min <= 0.0)
    throw ConfigError("vo config: t_max and d_min must be positive");
  if (cfg.candidates < 2) throw ConfigError("vo config: candidates must be >= 2");
  if (cfg.n_h < 1) throw ConfigError("vo config: n_h must be >= 1");
  if (cfg.cone_radius <= 0.0) throw ConfigError("vo config: cone_radius must be positive");
  return cfg;
}

VoConfig VoConfig::load(const std::string& path) {
  return from_config(KeyValueFile::load(path));
}

double forecast_min_distance(const risk::Kinematics2D& os, const risk::Kinematics2D& ts,
                             double t_max) {
  const Vec2 p = ts.pos - os.pos;
  const Vec2 vr = ts.vel - os.vel;
  const double vv = vr.squaredNorm();
  double t = 0.0;
  if (vv > 0.0) t = std::clamp(-p.dot(vr) / vv, 0.0, t_max);
  return (p + t * vr).norm();
}

bool in_collision_cone(const Vec2& os_pos, const Vec2& candidate_vel,
                       const risk::Kinematics2D& ts, double radius) {
  const Vec2 p = ts.pos - os_pos;
  const double d = p.norm();
  if (d <= radius) return true;
  const Vec2 vr = candidate_vel - ts.vel;
  if (vr.norm() < 1e-12 || p.dot(vr) <= 0.0) return false;
  // perpendicular miss distance of the relative ray against the expanded disc
  const double miss = std::fabs(cross_z(p, vr)) / vr.norm();
  return miss < radius;
}

double VoPlanner::plan(const dyn::ShipState& os, const std::vector<dyn::ShipState>& ts_list,
                       const Vec2& goal) {
  const Vec2 pos = os.position();
  const double speed = os.total_speed();
  const Vec2 to_goal = goal - pos;
  const double goal_heading =
      to_goal.norm() > 1e-9 ? std::atan2(to_goal.y(), to_goal.x()) : os.psi;
  if (speed < 1e-9) return limit_turn(os.psi, goal_heading);

  // pre-collision check on the actual current velocities
  struct Threat {
    risk::Kinematics2D kin;
    bool colreg_constrained;
  };
  std::vector<Threat> threats;
  const risk::Kinematics2D os_now = risk::kinematics(os);
  for (const auto& ts : ts_list) {
    const risk::Kinematics2D kin = risk::kinematics(ts);
    // pre-collision check: the linear forecast comes within d_min somewhere
    // inside the horizon (entry time, not CPA time: a slow converger whose
    // closest approach lies beyond t_max still breaches d_min well before it)
    if (forecast_min_distance(os_now, kin, cfg_.t_max) >= cfg_.d_min) continue;
    const int sigma = colreg::classify(os, ts).sigma;
    const double tcpa = risk::cpa(os_now, kin).first;
    threats.push_back({kin, (sigma == 1 || sigma == 2) && tcpa >= 0.0});
  }

  if (threats.empty() && !has_commitment_) return limit_turn(os.psi, goal_heading);

  const Vec2 v_goal = speed * to_goal.normalized();
  const auto feasible = [&](const Vec2& vel) {
    for (const auto& t : threats) {
      if (in_collision_cone(pos, vel, t.kin, cfg_.cone_radius)) return false;
      const double gap = (t.kin.pos - pos).norm();
      if (gap < cfg_.d_min) {
        // separation already lost: accept any candidate that gets no closer
        const auto [tcpa, dcpa] = risk::cpa(with_velocity(pos, vel), t.kin);
        if (tcpa > 0.0 && dcpa < gap) return false;
      } else if (forecast_min_distance(with_velocity(pos, vel), t.kin, cfg_.t_max) <
                 cfg_.d_min) {
        return false;
      }
      // encounter rules: never pass a head-on or starboard-crossing ship on
      // its starboard side; the relative ray must clear it clockwise
      if (t.colreg_constrained &&
          cross_z(t.kin.pos - pos, vel - t.kin.vel) < 0.0)
        return false;
    }
    return true;
  };

  const double span_step = kPi / (cfg_.candidates - 1);
  double best_heading = goal_heading;
  double best_cost = std::numeric_limits<double>::infinity();
  double fallback_heading = goal_heading;
  double fallback_violation = std::numeric_limits<double>::infinity();
  bool any_feasible = threats.empty();  // no threats: the goal heading wins outright
  for (int i = 0; !threats.empty() && i < cfg_.candidates; ++i) {
    const double heading = geo::clip_angle(os.psi - kPi / 2.0 + i * span_step, 0.0);
    const Vec2 vel = speed * heading_vector(heading);
    if (feasible(vel)) {
      const double cost = (vel - v_goal).norm();
      if (cost < best_cost) {
        best_cost = cost;
        best_heading = heading;
        any_feasible = true;
      }
    } else if (!any_feasible) {
      // documented fallback: smallest worst-case forecast violation
      double worst = 0.0;
      for (const auto& t : threats)
        worst = std::max(worst, cfg_.d_min - forecast_min_distance(
                                                 with_velocity(pos, vel), t.kin, cfg_.t_max));
      if (worst < fallback_violation) {
        fallback_violation = worst;
        fallback_heading = heading;
      }
    }
  }
  const double winner = any_feasible ? best_heading : fallback_heading;

  if (!has_commitment_) {
    has_commitment_ = true;
    committed_ = winner;
    challenger_streak_ = 0;
  } else if (!feasible(speed * heading_vector(committed_))) {
    // the committed heading went infeasible: switch immediately rather than
    // waiting out the hysteresis window
    committed_ = winner;
    challenger_streak_ = 0;
  } else if (std::fabs(geo::clip_angle(winner - committed_, -kPi)) < 0.5 * span_step) {
    challenger_streak_ = 0;
  } else {
    if (challenger_streak_ > 0 &&
        std::fabs(geo::clip_angle(winner - challenger_, -kPi)) < 0.5 * span_step) {
      challenger_ = winner;  // track slow drift (e.g. a moving goal bearing)
      ++challenger_streak_;
    } else {
      challenger_ = winner;
      challenger_streak_ = 1;
    }
    if (challenger_streak_ >= cfg_.n_h) {
      committed_ = challenger_;
      challenger_streak_ = 0;
    }
  }
  return limit_turn(os.psi, committed_);
}

dyn::ShipState follow_heading(const dyn::ShipState& state, double heading_cmd, double dt) {
  dyn::ShipState next = state;
  const double speed = state.total_speed();
  next.psi = limit_turn(state.psi, heading_cmd);
  next.r_yaw = geo::clip_angle(next.psi - state.psi, -kPi) / dt;
  next.u = speed;
  next.v = 0.0;
  const Vec2 pos = state.position() + dt * speed * heading_vector(next.psi);
  next.x_n = pos.x();
  next.y_n = pos.y();
  return next;
}

}  // namespace asv::baselines
