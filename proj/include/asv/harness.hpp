#pragma once

#include "asv/baselines.hpp"
#include "asv/env.hpp"
#include "asv/scenarios.hpp"
#include "asv/trainer.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace asv::harness {

enum class PolicyKind { drl, apf, vo, noop };

PolicyKind parse_policy(const std::string& name);  // throws ConfigError
std::string policy_name(PolicyKind kind);

/// Everything a rollout needs to drive one controlled ship.
struct PolicyBundle {
  PolicyKind kind = PolicyKind::noop;
  const qnet::NetworkParams* net = nullptr;  // required for drl
  baselines::ApfConfig apf;
  baselines::VoConfig vo;
};

/// Per-controlled-agent episode accounting. min_domain_distance measures the
/// gap between a traffic midship and the agent's domain border: zero means
/// on the border, negative means inside (a domain violation, not necessarily
/// hull contact).
struct RunMetrics {
  bool goal_reached = false;
  long collision_count = 0;  // domain entry events, not per-step flags
  double min_domain_distance = std::numeric_limits<double>::infinity();
  double path_length = 0.0;
  long steps = 0;
  long colreg_violation_steps = 0;
  long rudder_reversals = 0;
};

struct ShipSample {
  double t = 0.0;
  int ship_id = 0;  // controlled agents first, then passive traffic
  dyn::ShipState state;
};

struct DistanceSample {
  double t = 0.0;
  int ship_id = 0;   // the observing agent
  int other_id = 0;  // any other ship
  double distance = 0.0;         // midship to midship [m]
  double domain_distance = 0.0;  // distance - domain radius at bearing [m]
};

struct RudderSample {
  double t = 0.0;
  int ship_id = 0;
  double delta = 0.0;
};

struct RolloutResult {
  std::vector<RunMetrics> per_agent;
  std::vector<ShipSample> trajectory;
  std::vector<DistanceSample> distances;
  std::vector<RudderSample> rudder;
};

/// Runs one scenario to goal or timeout. DRL agents use the full rudder
/// dynamics; APF/VO/noop use heading-following kinematics. Multi-agent
/// scenarios drive every agent with the same bundle; agents that reach
/// their goal hold course and stop accumulating metrics.
RolloutResult rollout(const env::Environment& environment, const scen::ScenarioSpec& spec,
                      const PolicyBundle& policy);

// artifact writers; all numeric output is %.17g for byte-stable reruns
void write_trajectory_csv(const std::string& path, const RolloutResult& result);
void write_distances_csv(const std::string& path, const RolloutResult& result);
void write_rudder_csv(const std::string& path, const RolloutResult& result);
void write_metrics_json(const std::string& path, const std::string& case_name,
                        const std::string& policy, const RolloutResult& result);
/// Pure view of the trajectory samples; dots mark 5-minute intervals.
void write_trajectory_svg(const std::string& path, const RolloutResult& result);

/// Cross-policy comparison over validated run directories. Rows are sorted
/// by collision rate, then mean path length. Returns false (and explains on
/// `err`) when no readable runs are found or schemas mismatch.
bool report(const std::vector<std::string>& run_dirs, std::ostream& csv_out,
            std::ostream& text_out, std::ostream& err);

// CLI entry points; exit codes: 0 success, 1 runtime failure, 2 config error
struct TrainArgs {
  std::string config_path;
  std::string out_dir;
  unsigned long long seed = 0;
};
int cmd_train(const TrainArgs& args, std::ostream& err);

struct ValidateArgs {
  std::string suite;   // atc | imazu | star4 | star8 | custom
  std::string policy;  // drl | apf | vo | noop
  std::string checkpoint_path;  // drl only
  std::string apf_config_path;  // optional override
  std::string vo_config_path;   // optional override
  std::string coef_path;        // hydrodynamic coefficient file
  std::string env_config_path;  // optional override
  std::string scenario_path;    // custom suite only
  std::string out_dir;
  bool svg = false;
};
int cmd_validate(const ValidateArgs& args, std::ostream& err);

int cmd_report(const std::vector<std::string>& run_dirs, std::ostream& out,
               std::ostream& err);

}  // namespace asv::harness
