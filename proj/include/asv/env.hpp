#pragma once

#include "asv/dynamics.hpp"
#include "asv/risk.hpp"

#include <optional>
#include <random>
#include <vector>

namespace asv::env {

using OsFeatures = Eigen::Matrix<double, 7, 1>;
using TsFeatures = Eigen::Matrix<double, 6, 1>;

/// Agent-facing observation: scaled OS features plus one 6-vector per TS,
/// sorted by ascending collision risk (most dangerous last). When no TS
/// exists the list holds exactly the no-risk padding vector.
struct Observation {
  OsFeatures os = OsFeatures::Zero();
  std::vector<TsFeatures> ts;
};

TsFeatures no_risk_padding();

struct RewardWeights {
  double dist = 0.05 / 6.15;
  double head = 2.0 / 6.15;
  double coll = 1.8 / 6.15;
  double colreg = 2.0 / 6.15;
  double comf = 0.3 / 6.15;
};

struct RewardBreakdown {
  double total = 0.0;
  double dist = 0.0, head = 0.0, coll = 0.0, colreg = 0.0, comf = 0.0;
};

struct EnvConfig {
  double dt = dyn::kDefaultDt;
  long max_steps = 1500;
  double goal_radius = 960.0;  // 3 L_pp
  double os_rps = 1.8;
  risk::DomainSpec domain;
  RewardWeights weights;
  // reward constants
  double c7 = 20.0, c8 = -1.0, c9 = -10.0, c10 = -1.0, c11 = -1.0, c12 = 0.2;
  // TS-count spawn probabilities for 0..3 target ships
  double spawn_p[4] = {0.1, 0.3, 0.3, 0.3};
  // observation scaling
  double u_scale = 7.0;
  double v_scale = 0.7;
  double r_scale = 0.004;
  double rdot_scale = 8e-5;
  double delta_scale = 20.0 * kPi / 180.0;
  double d_scale = 14.0 * kNauticalMile;

  static EnvConfig from_config(const KeyValueFile& kv);
  static EnvConfig load(const std::string& path);
};

struct EpisodeState {
  dyn::ShipState os;
  std::vector<dyn::ShipState> ts_list;
  Vec2 goal = Vec2::Zero();
  long step_count = 0;
};

enum class Terminal { none, goal_reached, timeout };

/// POMDP environment: observation construction, reward, stepping, episode
/// lifecycle, and the COLREG-based spawning routine. Immutable after
/// construction; episodes are value types owned by the caller.
class Environment {
 public:
  Environment(dyn::HydroCoefficients coeff, EnvConfig cfg);

  Observation observe(const EpisodeState& ep) const;

  /// Reward for the transition before -> after under `action`; risk terms
  /// are evaluated on the post-step state.
  RewardBreakdown reward(const EpisodeState& before, const EpisodeState& after,
                         int action) const;

  /// Action index in {0,1,2} maps to rudder increments {0, -5deg, +5deg}.
  /// Target ships move linearly and deterministically.
  EpisodeState apply_action(const EpisodeState& ep, int action) const;

  Terminal is_terminal(const EpisodeState& ep, bool training = true) const;

  EpisodeState spawn_episode(std::mt19937_64& rng,
                             std::optional<int> n_ts_override = {},
                             std::optional<int> sigma_override = {}) const;
  dyn::ShipState spawn_target_ship(std::mt19937_64& rng, const EpisodeState& ep,
                                   std::optional<int> sigma_override = {}) const;

  /// Per-TS risk assessments in ts_list order (unsorted).
  std::vector<risk::RiskAssessment> assess(const EpisodeState& ep) const;

  double cruise_speed() const { return cruise_speed_; }
  const EnvConfig& config() const { return cfg_; }
  const dyn::HydroCoefficients& coefficients() const { return coeff_; }

 private:
  dyn::HydroCoefficients coeff_;
  EnvConfig cfg_;
  double cruise_speed_;  // steady_speed(os_rps), cached
};

}  // namespace asv::env
