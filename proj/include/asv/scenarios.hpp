#pragma once

#include "asv/dynamics.hpp"

#include <string>
#include <vector>

namespace asv::scen {

struct AgentInit {
  dyn::ShipState state;
  Vec2 goal = Vec2::Zero();
};

/// One validation case. Single-agent scenarios hold exactly one agent plus
/// passive target ships; Star scenarios are multi-agent with every ship
/// running the policy and no passive traffic.
struct ScenarioSpec {
  std::string name;
  bool multi_agent = false;
  std::vector<AgentInit> agents;
  std::vector<dyn::ShipState> ts_inits;
};

/// Single target ship on heading j/25 * 2pi, both ships reaching the origin
/// after 25 minutes of unsteered travel at cruise_speed. j in [1, 24].
ScenarioSpec around_the_clock(int j, double cruise_speed);

/// The 22 multi-encounter cases; positions and headings fixed by the
/// published constellation table. case_id in [1, 22].
ScenarioSpec imazu(int case_id, double cruise_speed);

/// n ships on headings k * 2pi / n, each 25 minutes from the origin, each
/// bound for the antipodal spawn point. n in {4, 8}.
ScenarioSpec star(int n, double cruise_speed);

/// Text round trip; serialization preserves every double bit-exactly.
std::string serialize(const ScenarioSpec& spec);
ScenarioSpec parse_scenario(const std::string& text);
ScenarioSpec load_scenario(const std::string& path);
void save_scenario(const ScenarioSpec& spec, const std::string& path);

}  // namespace asv::scen
