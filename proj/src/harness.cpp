#include "asv/harness.hpp"

#include "asv/geo.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace asv::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

int sign_of(double x) { return x > 0.0 ? 1 : (x < 0.0 ? -1 : 0); }

dyn::ShipState advance_linear(const dyn::ShipState& s, double dt) {
  dyn::ShipState next = s;
  const Vec2 pos = s.position() + dt * s.ground_velocity();
  next.x_n = pos.x();
  next.y_n = pos.y();
  return next;
}

double domain_gap(const risk::DomainSpec& domain, const dyn::ShipState& agent,
                  const dyn::ShipState& other) {
  const double dist = (other.position() - agent.position()).norm();
  if (dist < 1e-9) return -domain.d_stern;  // coincident midships: deep inside
  const double alpha = geo::relative_bearing(
      geo::absolute_bearing(agent.position(), other.position()), agent.psi);
  return dist - risk::domain_radius(domain, alpha);
}

}  // namespace

PolicyKind parse_policy(const std::string& name) {
  if (name == "drl") return PolicyKind::drl;
  if (name == "apf") return PolicyKind::apf;
  if (name == "vo") return PolicyKind::vo;
  if (name == "noop") return PolicyKind::noop;
  throw ConfigError("unknown policy '" + name + "' (expected drl, apf, vo, or noop)");
}

std::string policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::drl: return "drl";
    case PolicyKind::apf: return "apf";
    case PolicyKind::vo: return "vo";
    case PolicyKind::noop: return "noop";
  }
  return "?";
}

RolloutResult rollout(const env::Environment& environment, const scen::ScenarioSpec& spec,
                      const PolicyBundle& policy) {
  if (policy.kind == PolicyKind::drl && policy.net == nullptr)
    throw std::invalid_argument("drl rollout needs network parameters");
  if (spec.agents.empty()) throw std::invalid_argument("scenario has no agents");

  const auto& cfg = environment.config();
  const int n_agents = static_cast<int>(spec.agents.size());
  const int n_ships = n_agents + static_cast<int>(spec.ts_inits.size());

  std::vector<dyn::ShipState> ships;
  for (const auto& a : spec.agents) ships.push_back(a.state);
  for (const auto& t : spec.ts_inits) ships.push_back(t);

  RolloutResult result;
  result.per_agent.resize(n_agents);
  std::vector<bool> done(n_agents, false);
  std::vector<int> last_rudder_sign(n_agents, 0);
  std::vector<std::vector<bool>> inside(n_agents, std::vector<bool>(n_ships, false));

  std::vector<trainer::HistoryWindow> windows;
  std::vector<baselines::VoPlanner> planners;
  if (policy.kind == PolicyKind::drl)
    windows.assign(n_agents, trainer::HistoryWindow(policy.net->cfg.history));
  if (policy.kind == PolicyKind::vo)
    planners.assign(n_agents, baselines::VoPlanner(policy.vo));

  const auto others_of = [&](int agent) {
    std::vector<dyn::ShipState> list;
    for (int j = 0; j < n_ships; ++j)
      if (j != agent) list.push_back(ships[j]);
    return list;
  };

  const auto record = [&](double t) {
    for (int j = 0; j < n_ships; ++j) result.trajectory.push_back({t, j, ships[j]});
    for (int a = 0; a < n_agents; ++a) {
      result.rudder.push_back({t, a, ships[a].delta});
      for (int j = 0; j < n_ships; ++j) {
        if (j == a) continue;
        const double dist = (ships[j].position() - ships[a].position()).norm();
        const double gap = domain_gap(cfg.domain, ships[a], ships[j]);
        result.distances.push_back({t, a, j, dist, gap});
        inside[a][static_cast<size_t>(j)] = gap <= 0.0;
        if (!done[a])
          result.per_agent[a].min_domain_distance =
              std::min(result.per_agent[a].min_domain_distance, gap);
      }
    }
  };
  record(0.0);
  for (int a = 0; a < n_agents; ++a)
    if ((ships[a].position() - spec.agents[a].goal).norm() <= cfg.goal_radius) {
      done[a] = true;
      result.per_agent[a].goal_reached = true;
    }

  for (long step = 1; step <= cfg.max_steps; ++step) {
    // plan every ship from the same snapshot, then move simultaneously
    std::vector<dyn::ShipState> next = ships;
    const std::vector<std::vector<bool>> was_inside = inside;
    for (int a = 0; a < n_agents; ++a) {
      if (done[a]) {
        next[a] = baselines::follow_heading(ships[a], ships[a].psi, cfg.dt);
        continue;
      }
      switch (policy.kind) {
        case PolicyKind::drl: {
          env::EpisodeState ep;
          ep.os = ships[a];
          ep.ts_list = others_of(a);
          ep.goal = spec.agents[a].goal;
          const auto obs = environment.observe(ep);
          if (step == 1)
            windows[a].reset(obs);
          else
            windows[a].push(obs);
          const int action = trainer::greedy_action(*policy.net, windows[a].get());
          const double ddelta = action == 0 ? 0.0
                                : action == 1 ? -dyn::kRudderIncrement
                                              : dyn::kRudderIncrement;
          next[a] = dyn::step(ships[a], environment.coefficients(), ddelta, cfg.dt);
          break;
        }
        case PolicyKind::apf: {
          const double cmd =
              baselines::apf_heading(policy.apf, ships[a], others_of(a), spec.agents[a].goal);
          next[a] = baselines::follow_heading(ships[a], cmd, cfg.dt);
          break;
        }
        case PolicyKind::vo: {
          const double cmd = planners[a].plan(ships[a], others_of(a), spec.agents[a].goal);
          next[a] = baselines::follow_heading(ships[a], cmd, cfg.dt);
          break;
        }
        case PolicyKind::noop:
          next[a] = baselines::follow_heading(ships[a], ships[a].psi, cfg.dt);
          break;
      }
    }
    for (int j = n_agents; j < n_ships; ++j) next[j] = advance_linear(ships[j], cfg.dt);

    for (int a = 0; a < n_agents; ++a) {
      if (done[a]) continue;
      auto& m = result.per_agent[a];
      ++m.steps;
      m.path_length += (next[a].position() - ships[a].position()).norm();
      const int s = sign_of(next[a].delta);
      if (s != 0) {
        if (last_rudder_sign[a] != 0 && s != last_rudder_sign[a]) ++m.rudder_reversals;
        last_rudder_sign[a] = s;
      }
    }
    ships = std::move(next);
    record(step * cfg.dt);

    for (int a = 0; a < n_agents; ++a) {
      if (done[a]) continue;
      auto& m = result.per_agent[a];
      bool colreg_hit = false;
      for (int j = 0; j < n_ships; ++j) {
        if (j == a) continue;
        if (!was_inside[a][static_cast<size_t>(j)] && inside[a][static_cast<size_t>(j)])
          ++m.collision_count;
        const auto assessment = risk::collision_risk(ships[a], ships[j], cfg.domain);
        if ((assessment.sigma.sigma == 1 || assessment.sigma.sigma == 2) &&
            assessment.tcpa >= 0.0 && ships[a].r_yaw < 0.0)
          colreg_hit = true;
      }
      if (colreg_hit) ++m.colreg_violation_steps;
      if ((ships[a].position() - spec.agents[a].goal).norm() <= cfg.goal_radius) {
        done[a] = true;
        m.goal_reached = true;
      }
    }
    if (std::all_of(done.begin(), done.end(), [](bool d) { return d; })) break;
  }
  return result;
}

void write_trajectory_csv(const std::string& path, const RolloutResult& result) {
  auto out = open_out(path);
  out << "t,ship_id,x_n,y_n,psi,u,v,r_yaw,delta\n";
  for (const auto& s : result.trajectory)
    out << fmt(s.t) << ',' << s.ship_id << ',' << fmt(s.state.x_n) << ','
        << fmt(s.state.y_n) << ',' << fmt(s.state.psi) << ',' << fmt(s.state.u) << ','
        << fmt(s.state.v) << ',' << fmt(s.state.r_yaw) << ',' << fmt(s.state.delta)
        << '\n';
}

void write_distances_csv(const std::string& path, const RolloutResult& result) {
  auto out = open_out(path);
  out << "t,ship_id,other_id,distance,domain_distance\n";
  for (const auto& d : result.distances)
    out << fmt(d.t) << ',' << d.ship_id << ',' << d.other_id << ',' << fmt(d.distance)
        << ',' << fmt(d.domain_distance) << '\n';
}

void write_rudder_csv(const std::string& path, const RolloutResult& result) {
  auto out = open_out(path);
  out << "t,ship_id,delta\n";
  for (const auto& r : result.rudder)
    out << fmt(r.t) << ',' << r.ship_id << ',' << fmt(r.delta) << '\n';
}

void write_metrics_json(const std::string& path, const std::string& case_name,
                        const std::string& policy, const RolloutResult& result) {
  json doc;
  doc["case"] = case_name;
  doc["policy"] = policy;
  doc["agents"] = json::array();
  for (const auto& m : result.per_agent) {
    json a;
    a["goal_reached"] = m.goal_reached;
    a["collision_count"] = m.collision_count;
    if (std::isfinite(m.min_domain_distance))
      a["min_domain_distance"] = m.min_domain_distance;
    else
      a["min_domain_distance"] = nullptr;  // no traffic in the episode
    a["path_length"] = m.path_length;
    a["steps"] = m.steps;
    a["colreg_violation_steps"] = m.colreg_violation_steps;
    a["rudder_reversals"] = m.rudder_reversals;
    doc["agents"].push_back(a);
  }
  auto out = open_out(path);
  out << doc.dump(2) << '\n';
}

void write_trajectory_svg(const std::string& path, const RolloutResult& result) {
  static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                   "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
  double min_n = 1e18, max_n = -1e18, min_e = 1e18, max_e = -1e18;
  int max_id = 0;
  for (const auto& s : result.trajectory) {
    min_n = std::min(min_n, s.state.x_n);
    max_n = std::max(max_n, s.state.x_n);
    min_e = std::min(min_e, s.state.y_n);
    max_e = std::max(max_e, s.state.y_n);
    max_id = std::max(max_id, s.ship_id);
  }
  const double span = std::max({max_n - min_n, max_e - min_e, 1.0});
  const double pad = 0.05 * span;
  const double scale = 760.0 / (span + 2.0 * pad);
  // SVG x = east, SVG y = south (north points up on the page)
  const auto px = [&](const dyn::ShipState& s) {
    return 20.0 + scale * (s.y_n - min_e + pad);
  };
  const auto py = [&](const dyn::ShipState& s) {
    return 20.0 + scale * (max_n + pad - s.x_n);
  };

  auto out = open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"800\" "
         "viewBox=\"0 0 800 800\">\n"
      << "<rect width=\"800\" height=\"800\" fill=\"white\"/>\n";
  for (int id = 0; id <= max_id; ++id) {
    const char* color = kPalette[id % 8];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& s : result.trajectory)
      if (s.ship_id == id)
        out << fmt(px(s.state)) << ',' << fmt(py(s.state)) << ' ';
    out << "\"/>\n";
    // one dot per five simulated minutes
    for (const auto& s : result.trajectory)
      if (s.ship_id == id && std::fmod(s.t, 300.0) < 1e-9)
        out << "<circle cx=\"" << fmt(px(s.state)) << "\" cy=\"" << fmt(py(s.state))
            << "\" r=\"3\" fill=\"" << color << "\"/>\n";
  }
  out << "</svg>\n";
}

namespace {

struct PolicyAggregate {
  std::string policy;
  long episodes = 0;
  long goals = 0;
  long episodes_with_collision = 0;
  double sum_min_distance = 0.0;
  long min_distance_count = 0;
  double sum_path = 0.0;
  long colreg_steps = 0;
};

bool accumulate_run(const fs::path& dir, PolicyAggregate& agg, std::ostream& err) {
  bool found = false;
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().filename() == "metrics.json")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    std::ifstream in(file);
    json doc;
    try {
      in >> doc;
      const std::string policy = doc.at("policy").get<std::string>();
      if (agg.policy.empty()) agg.policy = policy;
      if (agg.policy != policy) {
        err << "report: mixed policies in " << dir.string() << " (" << agg.policy
            << " vs " << policy << ")\n";
        return false;
      }
      for (const auto& a : doc.at("agents")) {
        ++agg.episodes;
        if (a.at("goal_reached").get<bool>()) ++agg.goals;
        if (a.at("collision_count").get<long>() > 0) ++agg.episodes_with_collision;
        if (!a.at("min_domain_distance").is_null()) {
          agg.sum_min_distance += a.at("min_domain_distance").get<double>();
          ++agg.min_distance_count;
        }
        agg.sum_path += a.at("path_length").get<double>();
        agg.colreg_steps += a.at("colreg_violation_steps").get<long>();
      }
      found = true;
    } catch (const json::exception& e) {
      err << "report: malformed " << file.string() << ": " << e.what() << '\n';
      return false;
    }
  }
  if (!found) err << "report: no runs found in " << dir.string() << '\n';
  return found;
}

}  // namespace

bool report(const std::vector<std::string>& run_dirs, std::ostream& csv_out,
            std::ostream& text_out, std::ostream& err) {
  if (run_dirs.empty()) {
    err << "report: no runs found\n";
    return false;
  }
  std::vector<PolicyAggregate> rows;
  for (const auto& dir : run_dirs) {
    if (!fs::is_directory(dir)) {
      err << "report: not a directory: " << dir << '\n';
      return false;
    }
    PolicyAggregate agg;
    if (!accumulate_run(dir, agg, err)) return false;
    rows.push_back(agg);
  }

  struct Derived {
    std::string policy;
    long episodes;
    double goal_rate, collision_rate, mean_min_dist, mean_path;
    long colreg_steps;
  };
  std::vector<Derived> table;
  for (const auto& r : rows)
    table.push_back({r.policy, r.episodes,
                     static_cast<double>(r.goals) / r.episodes,
                     static_cast<double>(r.episodes_with_collision) / r.episodes,
                     r.min_distance_count > 0 ? r.sum_min_distance / r.min_distance_count
                                              : std::numeric_limits<double>::quiet_NaN(),
                     r.sum_path / r.episodes, r.colreg_steps});
  std::sort(table.begin(), table.end(), [](const Derived& a, const Derived& b) {
    if (a.collision_rate != b.collision_rate) return a.collision_rate < b.collision_rate;
    return a.mean_path < b.mean_path;
  });

  csv_out << "policy,episodes,goal_rate,collision_rate,mean_min_distance_m,"
             "mean_path_length_m,colreg_violation_steps\n";
  for (const auto& r : table)
    csv_out << r.policy << ',' << r.episodes << ',' << fmt(r.goal_rate) << ','
            << fmt(r.collision_rate) << ',' << fmt(r.mean_min_dist) << ','
            << fmt(r.mean_path) << ',' << r.colreg_steps << '\n';

  text_out << std::left << std::setw(8) << "policy" << std::right << std::setw(10)
           << "episodes" << std::setw(11) << "goal %" << std::setw(13) << "collision %"
           << std::setw(15) << "min dist [NM]" << std::setw(12) << "path [NM]"
           << std::setw(14) << "colreg steps" << '\n';
  for (const auto& r : table) {
    text_out << std::left << std::setw(8) << r.policy << std::right << std::setw(10)
             << r.episodes << std::setw(11) << std::fixed << std::setprecision(1)
             << 100.0 * r.goal_rate << std::setw(13) << 100.0 * r.collision_rate
             << std::setw(15) << std::setprecision(3) << r.mean_min_dist / kNauticalMile
             << std::setw(12) << r.mean_path / kNauticalMile << std::setw(14)
             << r.colreg_steps << '\n';
    text_out.unsetf(std::ios::fixed);
  }
  return true;
}

int cmd_train(const TrainArgs& args, std::ostream& err) {
  try {
    const auto cfg = trainer::TrainConfig::load(args.config_path);
    const auto coeff = dyn::HydroCoefficients::load(
        cfg.coef_path.empty() ? "data/kvlcc2.coef" : cfg.coef_path);
    const auto env_cfg = cfg.env_config_path.empty()
                             ? env::EnvConfig{}
                             : env::EnvConfig::load(cfg.env_config_path);
    const env::Environment environment(coeff, env_cfg);

    fs::create_directories(args.out_dir);
    const std::string metrics = args.out_dir + "/metrics.csv";
    fs::remove(metrics);  // trainer appends; a rerun must start clean

    {
      std::ifstream in(args.config_path);
      std::ostringstream ss;
      ss << in.rdbuf();
      auto snap = open_out(args.out_dir + "/config.resolved");
      snap << "# resolved from " << args.config_path << " with seed " << args.seed << "\n"
           << ss.str();
    }

    std::mt19937_64 rng(args.seed);
    trainer::train(cfg, environment, rng, metrics, args.out_dir + "/checkpoint.bin");
    return 0;
  } catch (const ConfigError& e) {
    err << "train: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "train: " << e.what() << '\n';
    return 1;
  }
}

int cmd_validate(const ValidateArgs& args, std::ostream& err) {
  try {
    const PolicyKind kind = parse_policy(args.policy);
    const auto coeff = dyn::HydroCoefficients::load(
        args.coef_path.empty() ? "data/kvlcc2.coef" : args.coef_path);
    const auto env_cfg = args.env_config_path.empty()
                             ? env::EnvConfig{}
                             : env::EnvConfig::load(args.env_config_path);
    const env::Environment environment(coeff, env_cfg);

    PolicyBundle bundle;
    bundle.kind = kind;
    qnet::Checkpoint checkpoint;
    if (kind == PolicyKind::drl) {
      if (args.checkpoint_path.empty()) {
        err << "validate: drl policy needs --checkpoint\n";
        return 2;
      }
      checkpoint = qnet::load_checkpoint(args.checkpoint_path);
      bundle.net = &checkpoint.params;
    }
    if (!args.apf_config_path.empty())
      bundle.apf = baselines::ApfConfig::load(args.apf_config_path);
    if (!args.vo_config_path.empty())
      bundle.vo = baselines::VoConfig::load(args.vo_config_path);

    std::vector<scen::ScenarioSpec> cases;
    const double cruise = environment.cruise_speed();
    if (args.suite == "atc")
      for (int j = 1; j <= 24; ++j) cases.push_back(scen::around_the_clock(j, cruise));
    else if (args.suite == "imazu")
      for (int c = 1; c <= 22; ++c) cases.push_back(scen::imazu(c, cruise));
    else if (args.suite == "star4")
      cases.push_back(scen::star(4, cruise));
    else if (args.suite == "star8")
      cases.push_back(scen::star(8, cruise));
    else if (args.suite == "custom") {
      if (args.scenario_path.empty()) {
        err << "validate: custom suite needs --scenario\n";
        return 2;
      }
      cases.push_back(scen::load_scenario(args.scenario_path));
    } else {
      err << "validate: unknown suite '" << args.suite
          << "' (expected atc, imazu, star4, star8, or custom)\n";
      return 2;
    }

    for (const auto& spec : cases) {
      const auto result = rollout(environment, spec, bundle);
      const std::string dir = args.out_dir + "/" + spec.name;
      fs::create_directories(dir);
      write_trajectory_csv(dir + "/trajectory.csv", result);
      write_distances_csv(dir + "/distances.csv", result);
      write_rudder_csv(dir + "/rudder.csv", result);
      write_metrics_json(dir + "/metrics.json", spec.name, policy_name(kind), result);
      if (args.svg) write_trajectory_svg(dir + "/trajectory.svg", result);
    }
    return 0;
  } catch (const ConfigError& e) {
    err << "validate: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "validate: " << e.what() << '\n';
    return 1;
  }
}

int cmd_report(const std::vector<std::string>& run_dirs, std::ostream& out,
               std::ostream& err) {
  try {
    std::ostringstream csv, text;
    if (!report(run_dirs, csv, text, err)) return 1;
    out << text.str() << '\n' << csv.str();
    return 0;
  } catch (const std::exception& e) {
    err << "report: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace asv::harness
