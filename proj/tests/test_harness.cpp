#include "asv/harness.hpp"

#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

using namespace asv;
using namespace asv::harness;
namespace fs = std::filesystem;

namespace {

const env::Environment& validation_env() {
  static const env::Environment e = [] {
    auto cfg = env::EnvConfig{};
    cfg.max_steps = 4000;
    return env::Environment(dyn::HydroCoefficients::load(ASV_DATA_DIR "/kvlcc2.coef"),
                            cfg);
  }();
  return e;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("policy names parse both ways") {
  CHECK(parse_policy("drl") == PolicyKind::drl);
  CHECK(parse_policy("noop") == PolicyKind::noop);
  CHECK(policy_name(parse_policy("apf")) == "apf");
  CHECK(policy_name(parse_policy("vo")) == "vo");
  CHECK_THROWS_AS(parse_policy("rrt"), ConfigError);
}

TEST_CASE("noop rollout of a head-on case records the collision") {
  const auto& e = validation_env();
  const auto spec = scen::imazu(1, e.cruise_speed());
  const auto result = rollout(e, spec, PolicyBundle{});
  REQUIRE(result.per_agent.size() == 1);
  const auto& m = result.per_agent[0];
  CHECK(m.collision_count == 1);  // one entry event as the ships pass through
  CHECK(m.min_domain_distance < 0.0);
  CHECK(m.goal_reached);
  CHECK(m.rudder_reversals == 0);
  CHECK(m.path_length == doctest::Approx(m.steps * 3.0 * e.cruise_speed()).epsilon(1e-6));

  // row bookkeeping: every recorded instant covers every ship
  const size_t instants = static_cast<size_t>(m.steps) + 1;
  CHECK(result.trajectory.size() == instants * 2);
  CHECK(result.distances.size() == instants * 1);
  CHECK(result.rudder.size() == instants * 1);
}

TEST_CASE("vo rollout of the same case stays clear") {
  const auto& e = validation_env();
  const auto spec = scen::imazu(1, e.cruise_speed());
  PolicyBundle bundle;
  bundle.kind = PolicyKind::vo;
  const auto result = rollout(e, spec, bundle);
  CHECK(result.per_agent[0].goal_reached);
  CHECK(result.per_agent[0].collision_count == 0);
  CHECK(result.per_agent[0].min_domain_distance > 0.0);
}

TEST_CASE("multi-agent star rollout drives every ship") {
  const auto& e = validation_env();
  const auto spec = scen::star(4, e.cruise_speed());
  const auto result = rollout(e, spec, PolicyBundle{});  // noop: all meet at the origin
  REQUIRE(result.per_agent.size() == 4);
  for (const auto& m : result.per_agent) {
    CHECK(m.goal_reached);
    CHECK(m.collision_count >= 1);
  }
  // symmetry: every agent sees the same closest approach
  for (int a = 1; a < 4; ++a)
    CHECK(result.per_agent[a].min_domain_distance ==
          doctest::Approx(result.per_agent[0].min_domain_distance).epsilon(1e-9));
  int max_id = 0;
  for (const auto& s : result.trajectory) max_id = std::max(max_id, s.ship_id);
  CHECK(max_id == 3);
}

TEST_CASE("drl rollout with a random network executes the rudder dynamics") {
  const auto& e = validation_env();
  qnet::NetConfig net_cfg;
  net_cfg.hidden = 6;
  net_cfg.history = 1;
  std::mt19937_64 rng(3);
  // zeroed weights with a head bias favoring the starboard action: the
  // greedy policy must push the rudder off center
  auto params = qnet::zero_like(qnet::init_params(net_cfg, rng));
  params.head.b = Eigen::Vector3d(0.0, 0.0, 1.0);
  PolicyBundle bundle;
  bundle.kind = PolicyKind::drl;
  bundle.net = &params;
  const auto spec = scen::around_the_clock(12, e.cruise_speed());
  const auto result = rollout(e, spec, bundle);
  CHECK(result.per_agent[0].steps > 0);
  // the untrained net steers somewhere; rudder activity shows in the samples
  bool any_delta = false;
  for (const auto& r : result.rudder) any_delta = any_delta || r.delta != 0.0;
  CHECK(any_delta);
}

TEST_CASE("artifact writers: schemas and byte-identical reruns") {
  const auto& e = validation_env();
  const auto spec = scen::imazu(3, e.cruise_speed());
  const auto result = rollout(e, spec, PolicyBundle{});
  const auto dir = fresh_dir("asv_harness_writers");

  for (int round = 0; round < 2; ++round) {
    write_trajectory_csv((dir / "trajectory.csv").string(), result);
    write_distances_csv((dir / "distances.csv").string(), result);
    write_rudder_csv((dir / "rudder.csv").string(), result);
    write_metrics_json((dir / "metrics.json").string(), spec.name, "noop", result);
    write_trajectory_svg((dir / "trajectory.svg").string(), result);
    if (round == 0) {
      for (const char* f : {"trajectory.csv", "distances.csv", "rudder.csv",
                            "metrics.json", "trajectory.svg"})
        fs::copy_file(dir / f, dir / (std::string("first_") + f));
    }
  }
  for (const char* f : {"trajectory.csv", "distances.csv", "rudder.csv", "metrics.json",
                        "trajectory.svg"})
    CHECK(slurp((dir / f).string()) == slurp((dir / (std::string("first_") + f)).string()));

  CHECK(slurp((dir / "trajectory.csv").string())
            .starts_with("t,ship_id,x_n,y_n,psi,u,v,r_yaw,delta\n"));
  CHECK(slurp((dir / "distances.csv").string())
            .starts_with("t,ship_id,other_id,distance,domain_distance\n"));
  CHECK(slurp((dir / "rudder.csv").string()).starts_with("t,ship_id,delta\n"));
  CHECK(slurp((dir / "trajectory.svg").string()).starts_with("<svg"));

  const auto doc = nlohmann::json::parse(slurp((dir / "metrics.json").string()));
  CHECK(doc.at("case") == spec.name);
  CHECK(doc.at("policy") == "noop");
  REQUIRE(doc.at("agents").size() == 1);
  const auto& a = doc.at("agents")[0];
  CHECK(a.at("goal_reached") == result.per_agent[0].goal_reached);
  CHECK(a.at("collision_count") == result.per_agent[0].collision_count);
  CHECK(a.at("path_length") == result.per_agent[0].path_length);
  fs::remove_all(dir);
}

TEST_CASE("cmd_validate: custom suite end to end") {
  const auto& e = validation_env();
  const auto dir = fresh_dir("asv_harness_validate");
  const std::string scenario_file = (dir / "case.scn").string();
  scen::save_scenario(scen::around_the_clock(6, e.cruise_speed()), scenario_file);

  ValidateArgs args;
  args.suite = "custom";
  args.policy = "vo";
  args.coef_path = ASV_DATA_DIR "/kvlcc2.coef";
  args.scenario_path = scenario_file;
  args.out_dir = (dir / "run").string();
  args.svg = true;
  std::ostringstream err;
  REQUIRE(cmd_validate(args, err) == 0);
  const fs::path case_dir = dir / "run" / "atc_6";
  for (const char* f :
       {"trajectory.csv", "distances.csv", "rudder.csv", "metrics.json", "trajectory.svg"})
    CHECK(fs::exists(case_dir / f));

  // rerun overwrites to identical bytes
  const std::string before = slurp((case_dir / "trajectory.csv").string());
  REQUIRE(cmd_validate(args, err) == 0);
  CHECK(slurp((case_dir / "trajectory.csv").string()) == before);

  // error paths
  args.policy = "drl";
  CHECK(cmd_validate(args, err) == 2);  // checkpoint missing
  args.policy = "vo";
  args.suite = "nope";
  CHECK(cmd_validate(args, err) == 2);
  fs::remove_all(dir);
}

TEST_CASE("cmd_train: zero-step run writes artifacts; bad config exits 2") {
  const auto dir = fresh_dir("asv_harness_train");
  {
    std::ofstream cfg(dir / "train.cfg");
    cfg << "total_steps = 0\nhidden = 4\nhistory = 1\nn_ts_override = 0\n"
        << "coef = " << ASV_DATA_DIR << "/kvlcc2.coef\n";
  }
  TrainArgs args;
  args.config_path = (dir / "train.cfg").string();
  args.out_dir = (dir / "out").string();
  args.seed = 9;
  std::ostringstream err;
  REQUIRE(cmd_train(args, err) == 0);
  CHECK(fs::exists(dir / "out" / "checkpoint.bin"));
  CHECK(fs::exists(dir / "out" / "metrics.csv"));
  CHECK(fs::exists(dir / "out" / "config.resolved"));
  const auto back = qnet::load_checkpoint((dir / "out" / "checkpoint.bin").string());
  CHECK(back.params.cfg.hidden == 4);

  {
    std::ofstream cfg(dir / "bad.cfg");
    cfg << "totl_steps = 10\n";
  }
  args.config_path = (dir / "bad.cfg").string();
  std::ostringstream err2;
  CHECK(cmd_train(args, err2) == 2);
  CHECK(err2.str().find("totl_steps") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("report: aggregation, ordering, and failure modes") {
  const auto dir = fresh_dir("asv_harness_report");
  const auto put = [&](const std::string& rel, const char* policy, bool goal,
                       long collisions, double min_dist, double path) {
    fs::create_directories(dir / rel);
    nlohmann::json doc;
    doc["case"] = rel;
    doc["policy"] = policy;
    doc["agents"] = {{{"goal_reached", goal},
                      {"collision_count", collisions},
                      {"min_domain_distance", min_dist},
                      {"path_length", path},
                      {"steps", 100},
                      {"colreg_violation_steps", 2},
                      {"rudder_reversals", 0}}};
    std::ofstream((dir / rel / "metrics.json")) << doc.dump(2);
  };
  put("vo_run/case_a", "vo", true, 0, 800.0, 23000.0);
  put("vo_run/case_b", "vo", true, 0, 700.0, 25000.0);
  put("apf_run/case_a", "apf", true, 1, -100.0, 22000.0);
  put("apf_run/case_b", "apf", false, 0, 400.0, 22000.0);

  std::ostringstream csv, text, err;
  REQUIRE(report({(dir / "vo_run").string(), (dir / "apf_run").string()}, csv, text, err));
  std::istringstream lines(csv.str());
  std::string header, row1, row2;
  std::getline(lines, header);
  std::getline(lines, row1);
  std::getline(lines, row2);
  CHECK(header ==
        "policy,episodes,goal_rate,collision_rate,mean_min_distance_m,"
        "mean_path_length_m,colreg_violation_steps");
  CHECK(row1.starts_with("vo,2,1,0,750,24000,"));   // clean policy sorts first
  CHECK(row2.starts_with("apf,2,0.5,0.5,150,22000,"));
  CHECK(text.str().find("vo") < text.str().find("apf"));

  const auto empty = fresh_dir("asv_harness_report_empty");
  std::ostringstream c2, t2, e2;
  CHECK_FALSE(report({empty.string()}, c2, t2, e2));
  CHECK(e2.str().find("no runs found") != std::string::npos);
  CHECK_FALSE(report({}, c2, t2, e2));

  // schema mismatch: one directory mixing two policies
  put("mixed/case_a", "vo", true, 0, 1.0, 1.0);
  put("mixed/case_b", "apf", true, 0, 1.0, 1.0);
  std::ostringstream c3, t3, e3;
  CHECK_FALSE(report({(dir / "mixed").string()}, c3, t3, e3));
  fs::remove_all(dir);
  fs::remove_all(empty);
}
