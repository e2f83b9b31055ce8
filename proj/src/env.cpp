#include "asv/env.hpp"

#include "asv/geo.hpp"

#include <algorithm>
#include <cmath>

namespace asv::env {

TsFeatures no_risk_padding() {
  TsFeatures f;
  f << -1.0, 0.0, 1.0, -1.0, 0.0, 0.0;
  return f;
}

EnvConfig EnvConfig::from_config(const KeyValueFile& kv) {
  kv.require_known({"dt", "max_steps", "goal_radius", "os_rps",
                    "domain_bow", "domain_starboard", "domain_stern", "domain_port",
                    "w_dist", "w_head", "w_coll", "w_colreg", "w_comf",
                    "c7", "c8", "c9", "c10", "c11", "c12",
                    "spawn_p0", "spawn_p1", "spawn_p2", "spawn_p3"});
  EnvConfig c;
  c.dt = kv.get_real("dt", c.dt);
  c.max_steps = kv.get_int("max_steps", c.max_steps);
  c.goal_radius = kv.get_real("goal_radius", c.goal_radius);
  c.os_rps = kv.get_real("os_rps", c.os_rps);
  c.domain.d_bow = kv.get_real("domain_bow", c.domain.d_bow);
  c.domain.d_starboard = kv.get_real("domain_starboard", c.domain.d_starboard);
  c.domain.d_stern = kv.get_real("domain_stern", c.domain.d_stern);
  c.domain.d_port = kv.get_real("domain_port", c.domain.d_port);
  c.weights.dist = kv.get_real("w_dist", c.weights.dist);
  c.weights.head = kv.get_real("w_head", c.weights.head);
  c.weights.coll = kv.get_real("w_coll", c.weights.coll);
  c.weights.colreg = kv.get_real("w_colreg", c.weights.colreg);
  c.weights.comf = kv.get_real("w_comf", c.weights.comf);
  c.c7 = kv.get_real("c7", c.c7);
  c.c8 = kv.get_real("c8", c.c8);
  c.c9 = kv.get_real("c9", c.c9);
  c.c10 = kv.get_real("c10", c.c10);
  c.c11 = kv.get_real("c11", c.c11);
  c.c12 = kv.get_real("c12", c.c12);
  for (int i = 0; i < 4; ++i)
    c.spawn_p[i] = kv.get_real("spawn_p" + std::to_string(i), c.spawn_p[i]);
  return c;
}

EnvConfig EnvConfig::load(const std::string& path) {
  return from_config(KeyValueFile::load(path));
}

Environment::Environment(dyn::HydroCoefficients coeff, EnvConfig cfg)
    : coeff_(std::move(coeff)), cfg_(std::move(cfg)),
      cruise_speed_(dyn::steady_speed(cfg_.os_rps, coeff_)) {}

std::vector<risk::RiskAssessment> Environment::assess(const EpisodeState& ep) const {
  std::vector<risk::RiskAssessment> out;
  out.reserve(ep.ts_list.size());
  for (const auto& ts : ep.ts_list)
    out.push_back(risk::collision_risk(ep.os, ts, cfg_.domain));
  return out;
}

Observation Environment::observe(const EpisodeState& ep) const {
  Observation obs;

  const auto d = dyn::derivatives(ep.os, coeff_);
  const double d_goal = (ep.goal - ep.os.position()).norm();
  const double alpha_goal = geo::relative_bearing(
      geo::absolute_bearing(ep.os.position(), ep.goal), ep.os.psi);
  obs.os << ep.os.u / cfg_.u_scale, ep.os.v / cfg_.v_scale,
      ep.os.r_yaw / cfg_.r_scale, d.velocity_rates(2) / cfg_.rdot_scale,
      ep.os.delta / cfg_.delta_scale, d_goal / cfg_.d_scale,
      geo::clip_angle(alpha_goal, -kPi) / kPi;

  if (ep.ts_list.empty()) {
    obs.ts.push_back(no_risk_padding());
    return obs;
  }

  struct Entry {
    TsFeatures f;
    double cr;
    double dist;
  };
  std::vector<Entry> entries;
  entries.reserve(ep.ts_list.size());
  for (const auto& ts : ep.ts_list) {
    const auto r = risk::collision_risk(ep.os, ts, cfg_.domain);
    const double c_t = geo::heading_intersection(ep.os.psi, ts.psi);
    const double dist = (ts.position() - ep.os.position()).norm();
    const double alpha = geo::relative_bearing(
        geo::absolute_bearing(ep.os.position(), ts.position()), ep.os.psi);
    TsFeatures f;
    f << geo::clip_angle(c_t, -kPi) / kPi, ts.total_speed() / cfg_.u_scale,
        (dist - risk::domain_radius(cfg_.domain, alpha)) / cfg_.d_scale,
        geo::clip_angle(alpha, -kPi) / kPi, static_cast<double>(r.sigma.sigma), r.cr;
    entries.push_back({f, r.cr, dist});
  }
  // ascending risk; equal risk keeps the closer ship last
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.cr != b.cr) return a.cr < b.cr;
    return a.dist > b.dist;
  });
  for (auto& e : entries) obs.ts.push_back(e.f);
  return obs;
}

RewardBreakdown Environment::reward(const EpisodeState& before, const EpisodeState& after,
                                    int action) const {
  RewardBreakdown r;
  const double d_prev = (before.goal - before.os.position()).norm();
  const double d_now = (after.goal - after.os.position()).norm();
  r.dist = (d_prev - d_now) / cfg_.c7 + cfg_.c8;

  const double alpha_goal = geo::relative_bearing(
      geo::absolute_bearing(after.os.position(), after.goal), after.os.psi);
  r.head = -std::fabs(geo::clip_angle(alpha_goal, -kPi)) / kPi;

  bool all_low_risk = true;
  for (const auto& a : assess(after)) {
    r.coll += a.cr >= 1.0 ? cfg_.c9 : -std::sqrt(a.cr);
    if (a.tcpa >= 0.0 && after.os.r_yaw < 0.0 && (a.sigma.sigma == 1 || a.sigma.sigma == 2))
      r.colreg += cfg_.c10;
    if (a.cr > cfg_.c12) all_low_risk = false;
  }
  if (action != 0 && all_low_risk) r.comf = cfg_.c11;

  const auto& w = cfg_.weights;
  r.total = w.dist * r.dist + w.head * r.head + w.coll * r.coll +
            w.colreg * r.colreg + w.comf * r.comf;
  return r;
}

EpisodeState Environment::apply_action(const EpisodeState& ep, int action) const {
  if (action < 0 || action > 2)
    throw std::invalid_argument("apply_action: action index out of range");
  const double ddelta = action == 0 ? 0.0
                        : action == 1 ? -dyn::kRudderIncrement
                                      : dyn::kRudderIncrement;
  EpisodeState next = ep;
  next.os = dyn::step(ep.os, coeff_, ddelta, cfg_.dt);
  for (auto& ts : next.ts_list) {
    const Vec2 p = ts.position() + cfg_.dt * ts.ground_velocity();
    ts.x_n = p.x();
    ts.y_n = p.y();
  }
  ++next.step_count;
  return next;
}

Terminal Environment::is_terminal(const EpisodeState& ep, bool /*training*/) const {
  // collisions are never terminal
  if ((ep.goal - ep.os.position()).norm() <= cfg_.goal_radius)
    return Terminal::goal_reached;
  if (ep.step_count >= cfg_.max_steps) return Terminal::timeout;
  return Terminal::none;
}

EpisodeState Environment::spawn_episode(std::mt19937_64& rng,
                                        std::optional<int> n_ts_override,
                                        std::optional<int> sigma_override) const {
  EpisodeState ep;

  std::uniform_int_distribution<int> quadrant(0, 3);
  const double psi0 = quadrant(rng) * kPi / 2.0;
  std::uniform_real_distribution<double> disturb(-deg2rad(5.0), deg2rad(5.0));
  const double noise = disturb(rng);

  const double travel = cruise_speed_ * 25.0 * 60.0;
  const Vec2 dir(std::cos(psi0), std::sin(psi0));
  ep.os.x_n = -travel * dir.x();
  ep.os.y_n = -travel * dir.y();
  ep.os.psi = geo::clip_angle(psi0 + noise, 0.0);
  ep.os.u = cruise_speed_;
  ep.os.rps = cfg_.os_rps;
  ep.goal = travel * dir;

  int n_ts;
  if (n_ts_override) {
    n_ts = *n_ts_override;
  } else {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double x = u01(rng);
    double acc = 0.0;
    n_ts = 3;
    for (int k = 0; k < 4; ++k) {
      acc += cfg_.spawn_p[k];
      if (x < acc) {
        n_ts = k;
        break;
      }
    }
  }
  for (int i = 0; i < n_ts; ++i)
    ep.ts_list.push_back(spawn_target_ship(rng, ep, sigma_override));
  return ep;
}

dyn::ShipState Environment::spawn_target_ship(std::mt19937_64& rng, const EpisodeState& ep,
                                              std::optional<int> sigma_override) const {
  std::uniform_int_distribution<int> sigma_dist(0, 4);
  const int sigma = sigma_override ? *sigma_override : sigma_dist(rng);

  auto sample_deg = [&](double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return deg2rad(d(rng));
  };
  double c_t;
  switch (sigma) {
    case 1: c_t = sample_deg(175.0, 185.0); break;
    case 2: c_t = sample_deg(185.0, 292.5); break;
    case 3: c_t = sample_deg(67.5, 175.0); break;
    case 4: c_t = sample_deg(-67.5, 67.5); break;
    default: c_t = sample_deg(-67.5, 67.5); break;  // null case: similar course
  }

  std::uniform_real_distribution<double> rps_factor(0.9, 1.1);
  const double rps = rps_factor(rng) * 1.8;
  double speed = dyn::steady_speed(rps, coeff_);
  if (sigma == 4) {
    std::uniform_real_distribution<double> slow(0.3, 0.7);
    speed *= slow(rng);
  }

  std::uniform_real_distribution<double> t0_factor(0.75, 1.0);
  const double t0 = t0_factor(rng) * 25.0 * 60.0;

  dyn::ShipState ts;
  ts.psi = geo::clip_angle(ep.os.psi + c_t, 0.0);
  ts.u = speed;
  ts.rps = rps;

  // conflict point: OS progress toward the goal forecast over t0
  const Vec2 to_goal = (ep.goal - ep.os.position()).normalized();
  const double closing = ep.os.ground_velocity().dot(to_goal);
  const Vec2 conflict = ep.os.position() + closing * t0 * to_goal;
  const Vec2 pos = conflict - t0 * ts.ground_velocity();
  ts.x_n = pos.x();
  ts.y_n = pos.y();
  return ts;
}

}  // namespace asv::env
