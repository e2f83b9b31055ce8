#pragma once

#include "asv/risk.hpp"

#include <vector>

namespace asv::baselines {

/// Both planners may move the commanded heading by at most this much per
/// planning step (one environment step, 3 s).
constexpr double kHeadingRateLimit = 2.5 * kPi / 180.0;

/// `desired` pulled toward `psi` so the turn stays within `max_delta`.
/// Returns an absolute heading in [0, 2pi).
double limit_turn(double psi, double desired, double max_delta = kHeadingRateLimit);

/// Artificial potential field planner: quadratic attractive potential toward
/// the goal, inverse-distance repulsion from each target ship inside the
/// engagement radius, with an emergency multiplier inside d_safe.
struct ApfConfig {
  double eta_e = 5000.0;                    // emergency scaling inside d_safe
  double d_safe = 0.5 * kNauticalMile;      // emergency distance [m]
  double attractive_gain = 1.0;             // force per meter of goal distance
  double repulsive_gain = 1.0e14;           // scales the inverse-distance term
  double engagement_factor = 4.0;           // engagement radius = factor * d_safe
  double bias_deg = 10.0;                   // clockwise rotation of repulsion

  static ApfConfig from_config(const KeyValueFile& kv);
  static ApfConfig load(const std::string& path);
};

/// Direction of the summed force, clamped to within the rate limit of the
/// current heading. Zero net force keeps the current heading.
double apf_heading(const ApfConfig& cfg, const dyn::ShipState& os,
                   const std::vector<dyn::ShipState>& ts_list, const Vec2& goal);

/// Velocity-obstacle planner: N candidate headings at the current speed,
/// filtered by collision cones, a CPA pre-collision check (closest approach
/// ahead within t_max and closer than d_min), and the encounter rules, then
/// scored by distance to the goal-directed velocity.
struct VoConfig {
  double t_max = 900.0;                     // forecast horizon [s]
  double d_min = 0.75 * kNauticalMile;      // forecast miss distance [m]
  int n_h = 60;                             // evaluations before a voluntary switch
  int candidates = 500;                     // headings over [psi - pi/2, psi + pi/2]
  double cone_radius = 960.0;               // Minkowski expansion per ship pair [m]

  static VoConfig from_config(const KeyValueFile& kv);
  static VoConfig load(const std::string& path);
};

/// Smallest distance between the two ships under constant ground velocities,
/// over t in [0, t_max].
double forecast_min_distance(const risk::Kinematics2D& os, const risk::Kinematics2D& ts,
                             double t_max);

/// True when the relative ray from the OS pierces the disc of `radius`
/// around the TS (the classic velocity-obstacle cone test).
bool in_collision_cone(const Vec2& os_pos, const Vec2& candidate_vel,
                       const risk::Kinematics2D& ts, double radius);

/// One planner instance per controlled ship; holds the hysteresis state.
class VoPlanner {
 public:
  explicit VoPlanner(VoConfig cfg) : cfg_(cfg) {}

  /// Heading command for this step, already rate-limited.
  double plan(const dyn::ShipState& os, const std::vector<dyn::ShipState>& ts_list,
              const Vec2& goal);

  /// Currently committed absolute heading (before rate limiting).
  double committed() const { return committed_; }

 private:
  VoConfig cfg_;
  bool has_commitment_ = false;
  double committed_ = 0.0;
  double challenger_ = 0.0;
  int challenger_streak_ = 0;
};

/// Heading-following kinematics used when a classical planner drives the
/// ship: heading jumps to the (rate-limited) command, speed is preserved,
/// and the pose advances linearly for dt seconds.
dyn::ShipState follow_heading(const dyn::ShipState& state, double heading_cmd,
                              double dt = dyn::kDefaultDt);

}  // namespace asv::baselines
