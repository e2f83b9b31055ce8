// Acceptance gate: one pass/fail line per criterion, exit code = number of
// failures. Criterion 8 is qualitative and reports its observation instead
// of asserting it; everything else is a hard check.

#include "asv/geo.hpp"
#include "asv/harness.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace asv;
namespace fs = std::filesystem;

namespace {

const dyn::HydroCoefficients& coeff() {
  static const dyn::HydroCoefficients c =
      dyn::HydroCoefficients::load(ASV_DATA_DIR "/kvlcc2.coef");
  return c;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------- criterion 1

bool risk_kernel_exactness() {
  bool ok = true;
  ok &= std::fabs(risk::cr_cpa(0.0, 3704.0) - 0.1) < 1e-9;
  ok &= risk::cr_cpa(0.0, 0.0) == 1.0;
  // distance exceeding the domain by 0.3 * 3704 m decays exactly one e-fold
  ok &= std::fabs(risk::cr_ed(2111.2, 1000.0) - std::exp(-1.0)) < 1e-9;
  ok &= std::fabs(risk::f_dcpa(0.0, 0.0) - 0.2) < 1e-9;
  ok &= std::fabs(risk::f_dcpa(100.0, kPi / 6.0) - 1.0) < 1e-9;
  ok &= std::fabs(risk::f_dcpa(100.0, -kPi / 6.0) - 1.0) < 1e-9;
  return ok;
}

// ---------------------------------------------------------------- criterion 2

bool cpa_oracle_equivalence() {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> pos(-20000.0, 20000.0);
  std::uniform_real_distribution<double> vel(-8.0, 8.0);

  int bad = 0;
  for (int trial = 0; trial < 500; ++trial) {
    risk::Kinematics2D os, ts;
    do {
      os.pos = Vec2(pos(rng), pos(rng));
      ts.pos = Vec2(pos(rng), pos(rng));
      os.vel = Vec2(vel(rng), vel(rng));
      ts.vel = Vec2(vel(rng), vel(rng));
    } while ((os.vel - ts.vel).norm() < 0.5);

    const auto [tcpa, dcpa] = risk::cpa(os, ts);

    const Vec2 dp = ts.pos - os.pos;
    const Vec2 dv = ts.vel - os.vel;
    auto dist_at = [&](double t) { return (dp + t * dv).norm(); };

    // dense grid over a window guaranteed to bracket the minimum of the
    // (convex) separation curve, then a fine pass around the coarse argmin
    const double span = dp.norm() / dv.norm() + 5.0;
    const double coarse = std::max(span / 100000.0, 0.002);
    double best_t = -span, best_d = dist_at(-span);
    for (double t = -span; t <= span; t += coarse) {
      const double d = dist_at(t);
      if (d < best_d) best_d = d, best_t = t;
    }
    for (double t = best_t - 2.0 * coarse; t <= best_t + 2.0 * coarse; t += 0.001) {
      const double d = dist_at(t);
      if (d < best_d) best_d = d, best_t = t;
    }

    if (std::fabs(tcpa - best_t) > 0.02 || std::fabs(dcpa - best_d) > 0.5) {
      ++bad;
      std::printf("  cpa mismatch: trial %d analytic (%.4f, %.3f) grid (%.4f, %.3f)\n",
                  trial, tcpa, dcpa, best_t, best_d);
    }
  }
  return bad == 0;
}

// ---------------------------------------------------------------- criterion 3

// fresh transcription of the encounter table, first matching row wins
int table_sigma(double a_os_deg, double a_ts_deg, double ct_deg, double u_os_rel,
                double u_ts) {
  auto in = [](double x, double lo, double hi) { return x >= lo && x <= hi; };
  if ((in(a_os_deg, 0.0, 5.0) || in(a_os_deg, 355.0, 360.0)) && in(ct_deg, 175.0, 185.0))
    return 1;
  if (in(a_os_deg, 5.0, 112.5) && in(ct_deg, 185.0, 292.5)) return 2;
  if (in(a_os_deg, 247.5, 355.0) && in(ct_deg, 67.5, 175.0)) return 3;
  if (in(a_ts_deg, 112.5, 247.5) && (in(ct_deg, 0.0, 67.5) || in(ct_deg, 292.5, 360.0)) &&
      u_os_rel > u_ts)
    return 4;
  return 0;
}

bool colreg_table_fidelity() {
  long mismatches = 0;
  auto check_cell = [&](double a_os, double a_ts, double ct, double u_os_rel,
                        double u_ts) {
    colreg::EncounterGeometry g;
    g.alpha_os_ts = deg2rad(a_os);
    g.alpha_ts_os = deg2rad(a_ts);
    g.c_t = deg2rad(ct);
    g.u_os_rel = u_os_rel;
    g.u_ts = u_ts;
    // the oracle sees the same degree values the classifier recovers, so the
    // comparison isolates the interval structure and the row priority
    const int want = table_sigma(rad2deg(g.alpha_os_ts), rad2deg(g.alpha_ts_os),
                                 rad2deg(g.c_t), u_os_rel, u_ts);
    if (colreg::classify(g).sigma != want) ++mismatches;
  };

  // rows 1-3 vary with the OS-relative bearing and the heading intersection;
  // a dead-ahead TS bearing keeps row 4 inactive on both sides
  for (int i = 0; i < 720; ++i)
    for (int j = 0; j < 720; ++j) check_cell(0.5 * i, 0.0, 0.5 * j, 0.0, 0.0);

  // row 4 varies with the TS-relative bearing; alpha_os = 180 deg disables
  // rows 1-3, and both speed orderings exercise the strict inequality
  for (int i = 0; i < 720; ++i)
    for (int j = 0; j < 720; ++j) {
      check_cell(180.0, 0.5 * i, 0.5 * j, 5.0, 4.0);
      check_cell(180.0, 0.5 * i, 0.5 * j, 4.0, 4.0);
    }

  // shared endpoints resolve to the earliest matching row
  auto sigma_at = [&](double a_os, double a_ts, double ct, double u_os_rel, double u_ts) {
    colreg::EncounterGeometry g;
    g.alpha_os_ts = deg2rad(a_os);
    g.alpha_ts_os = deg2rad(a_ts);
    g.c_t = deg2rad(ct);
    g.u_os_rel = u_os_rel;
    g.u_ts = u_ts;
    return colreg::classify(g).sigma;
  };
  bool priority = true;
  priority &= sigma_at(5.0, 0.0, 185.0, 0.0, 0.0) == 1;     // row 1 beats row 2
  priority &= sigma_at(300.0, 180.0, 67.5, 5.0, 4.0) == 3;  // row 3 beats row 4
  priority &= sigma_at(180.0, 112.5, 0.0, 5.0, 4.0) == 4;   // row 4 bearing endpoint

  if (mismatches > 0) std::printf("  colreg grid mismatches: %ld\n", mismatches);
  return mismatches == 0 && priority;
}

// ---------------------------------------------------------------- criterion 4

bool dynamics_sanity() {
  const double u0 = dyn::steady_speed(1.8, coeff());
  const bool speed_ok = std::fabs(u0 - 7.42) / 7.42 < 0.05;
  if (!speed_ok) std::printf("  steady_speed(1.8) = %.4f\n", u0);

  // mirror symmetry: negating rudder, sway, yaw, heading, and east reflects
  // the trajectory across the north axis
  bool mirror_ok = true;
  dyn::ShipState a, b;
  a.u = b.u = u0;
  a.rps = b.rps = 1.8;
  a.delta = dyn::kRudderMax / 2.0;
  b.delta = -a.delta;
  for (int i = 0; i < 400; ++i) {
    a = dyn::step(a, coeff(), 0.0);
    b = dyn::step(b, coeff(), 0.0);
    mirror_ok = mirror_ok && std::fabs(a.x_n - b.x_n) < 1e-9 &&
                std::fabs(a.y_n + b.y_n) < 1e-9 && std::fabs(a.psi + b.psi) < 1e-9 &&
                std::fabs(a.u - b.u) < 1e-9 && std::fabs(a.v + b.v) < 1e-9 &&
                std::fabs(a.r_yaw + b.r_yaw) < 1e-9;
  }

  // position convergence on a converged steady turn, where the body rates
  // are constant and the error isolates the pose update
  dyn::ShipState turn;
  turn.u = u0;
  turn.rps = 1.8;
  turn.delta = dyn::kRudderMax;
  for (int i = 0; i < 4000; ++i) turn = dyn::step(turn, coeff(), 0.0, 0.5);
  turn.x_n = turn.y_n = 0.0;
  auto run = [&](double dt) {
    dyn::ShipState s = turn;
    const int n = static_cast<int>(std::round(60.0 / dt));
    for (int i = 0; i < n; ++i) s = dyn::step(s, coeff(), 0.0, dt);
    return Vec2(s.x_n, s.y_n);
  };
  const Vec2 ref = run(0.01);
  const double e3 = (run(3.0) - ref).norm();
  const double e15 = (run(1.5) - ref).norm();
  const bool order_ok = e3 / e15 > 3.0 && e3 / e15 < 5.0;
  if (!order_ok) std::printf("  convergence ratio e(3)/e(1.5) = %.3f\n", e3 / e15);
  return speed_ok && mirror_ok && order_ok;
}

// ---------------------------------------------------------------- criterion 5

env::Observation random_obs(int n_ts, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  env::Observation obs;
  for (int i = 0; i < 7; ++i) obs.os(i) = d(rng);
  for (int t = 0; t < n_ts; ++t) {
    env::TsFeatures f;
    for (int i = 0; i < 6; ++i) f(i) = d(rng);
    obs.ts.push_back(f);
  }
  return obs;
}

bool gradient_correctness() {
  qnet::NetConfig cfg;
  cfg.hidden = 4;
  cfg.history = 1;

  int bad_seeds = 0;
  for (unsigned seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 rng(seed);
    auto params = qnet::init_params(cfg, rng);
    qnet::ObservationHistory hist;
    for (int i = 0; i <= cfg.history; ++i) hist.push_back(random_obs(2, rng));

    Eigen::Vector3d out_grad(0.7, -1.3, 0.4);
    qnet::ForwardCache cache;
    qnet::forward(params, hist, &cache);
    auto grads = qnet::backward(params, cache, out_grad);

    auto scalar = [&]() { return out_grad.dot(qnet::forward(params, hist)); };

    double worst = 0.0;
    std::vector<std::pair<double*, double*>> spans;  // param data, grad data
    std::vector<long> sizes;
    qnet::for_each_tensor(
        [&](auto& p, auto& g) {
          spans.push_back({p.data(), g.data()});
          sizes.push_back(p.size());
        },
        params, grads);
    for (size_t s = 0; s < spans.size(); ++s) {
      for (long k = 0; k < sizes[s]; ++k) {
        double& w = spans[s].first[k];
        const double saved = w;
        const double eps = 1e-5;
        w = saved + eps;
        const double hi = scalar();
        w = saved - eps;
        const double lo = scalar();
        w = saved;
        const double fd = (hi - lo) / (2.0 * eps);
        const double an = spans[s].second[k];
        const double denom = std::max({std::fabs(fd), std::fabs(an), 1e-6});
        worst = std::max(worst, std::fabs(fd - an) / denom);
      }
    }
    if (worst >= 1e-4) {
      ++bad_seeds;
      std::printf("  gradient seed %u worst rel err %.3e\n", seed, worst);
    }
  }
  return bad_seeds == 0;
}

// ---------------------------------------------------------------- criterion 6

bool desk_scale_learning() {
  trainer::TrainConfig cfg;
  cfg.total_steps = 200000;
  cfg.hidden = 24;
  cfg.history = 2;
  cfg.lr = 1e-4;
  cfg.eps_decay_steps = 150000;
  cfg.eval_every = 10000;
  cfg.n_ts_override = 0;  // goal-only task

  const env::Environment e(coeff(), env::EnvConfig{});
  std::mt19937_64 rng(1);
  const auto result = trainer::train(cfg, e, rng);

  std::mt19937_64 eval_rng(123);
  const auto eps = trainer::evaluate(result.checkpoint.params, e, cfg, 50, eval_rng);
  int goals = 0;
  double mean_ret = 0.0;
  for (const auto& ep : eps) {
    goals += ep.goal_reached ? 1 : 0;
    mean_ret += ep.ret / 50.0;
  }

  std::mt19937_64 init_rng(77);
  qnet::NetConfig nc;
  nc.hidden = cfg.hidden;
  nc.history = cfg.history;
  const auto untrained = qnet::init_params(nc, init_rng);
  std::mt19937_64 eval_rng2(123);
  const auto ueps = trainer::evaluate(untrained, e, cfg, 50, eval_rng2);
  double untrained_ret = 0.0;
  for (const auto& ep : ueps) untrained_ret += ep.ret / 50.0;

  std::printf("  trained: %d/50 goals, mean return %.2f; untrained mean return %.2f\n",
              goals, mean_ret, untrained_ret);
  return goals >= 45 && mean_ret > untrained_ret;
}

// ------------------------------------------------------------- criteria 7, 8

const env::Environment& validation_env() {
  static const env::Environment e = [] {
    env::EnvConfig cfg;
    cfg.max_steps = 4000;  // validation budget: evasive detours need slack
    return env::Environment(coeff(), cfg);
  }();
  return e;
}

bool vo_validation() {
  const auto& e = validation_env();
  harness::PolicyBundle bundle;
  bundle.kind = harness::PolicyKind::vo;

  std::vector<scen::ScenarioSpec> cases;
  for (int j = 1; j <= 24; ++j) cases.push_back(scen::around_the_clock(j, e.cruise_speed()));
  for (int k = 1; k <= 22; ++k) cases.push_back(scen::imazu(k, e.cruise_speed()));

  int bad = 0;
  for (const auto& spec : cases) {
    const auto result = harness::rollout(e, spec, bundle);
    for (const auto& m : result.per_agent) {
      if (!m.goal_reached || m.min_domain_distance <= 0.0) {
        ++bad;
        std::printf("  vo %s: goal=%d min_domain_distance=%.1f\n", spec.name.c_str(),
                    m.goal_reached ? 1 : 0, m.min_domain_distance);
      }
    }
  }
  return bad == 0;
}

bool apf_qualitative() {
  const auto& e = validation_env();
  harness::PolicyBundle bundle;
  bundle.kind = harness::PolicyKind::apf;

  std::string violations;
  for (int k = 1; k <= 22; ++k) {
    const auto spec = scen::imazu(k, e.cruise_speed());
    const auto result = harness::rollout(e, spec, bundle);
    if (result.per_agent[0].min_domain_distance <= 0.0)
      violations += (violations.empty() ? "" : ", ") + std::to_string(k);
  }
  std::printf("  apf domain violations on the multi-encounter set: cases {%s}\n",
              violations.empty() ? "none" : violations.c_str());
  return true;  // reported, not asserted: the reference force law is external
}

// ---------------------------------------------------------------- criterion 9

bool determinism() {
  const fs::path root = fs::temp_directory_path() / "asv_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);

  {
    std::ofstream cfg(root / "train.cfg");
    cfg << "total_steps = 260\nbatch_size = 8\nwarmup = 40\neval_every = 130\n"
        << "eval_episodes = 2\nhidden = 6\nhistory = 1\nn_ts_override = 0\n"
        << "coef = " << ASV_DATA_DIR << "/kvlcc2.coef\n";
  }
  harness::TrainArgs targs;
  targs.config_path = (root / "train.cfg").string();
  targs.seed = 7;
  std::ostringstream err;
  targs.out_dir = (root / "train_a").string();
  const int rc_a = harness::cmd_train(targs, err);
  targs.out_dir = (root / "train_b").string();
  const int rc_b = harness::cmd_train(targs, err);
  const bool train_ok = rc_a == 0 && rc_b == 0 &&
                        slurp(root / "train_a" / "metrics.csv") ==
                            slurp(root / "train_b" / "metrics.csv") &&
                        !slurp(root / "train_a" / "metrics.csv").empty();

  harness::ValidateArgs vargs;
  vargs.suite = "imazu";
  vargs.policy = "vo";
  vargs.coef_path = ASV_DATA_DIR "/kvlcc2.coef";
  vargs.env_config_path = ASV_DATA_DIR "/env_validate.cfg";
  vargs.out_dir = (root / "val_a").string();
  const int rv_a = harness::cmd_validate(vargs, err);
  vargs.out_dir = (root / "val_b").string();
  const int rv_b = harness::cmd_validate(vargs, err);
  bool validate_ok = rv_a == 0 && rv_b == 0;
  for (int k = 1; k <= 22 && validate_ok; ++k) {
    const std::string name = "imazu_" + std::to_string(k);
    validate_ok = slurp(root / "val_a" / name / "trajectory.csv") ==
                  slurp(root / "val_b" / name / "trajectory.csv");
  }

  if (!train_ok) std::printf("  train reruns differ (%s)\n", err.str().c_str());
  if (!validate_ok) std::printf("  validate reruns differ (%s)\n", err.str().c_str());
  fs::remove_all(root);
  return train_ok && validate_ok;
}

// --------------------------------------------------------------- criterion 10

struct GoldenTs {
  double phi_deg, n_nm, e_nm;
};

// golden re-transcription of the published constellation table
const std::vector<std::vector<GoldenTs>> kGolden = {
    {{180, 6.009, 0.000}},
    {{-90, 0.000, 6.009}},
    {{0, -2.337, 0.000}},
    {{45, -4.249, -4.249}},
    {{180, 6.009, 0.000}, {-90, 0.000, 6.009}},
    {{-10, -5.918, 1.043}, {-45, -4.249, 4.249}},
    {{0, -2.337, 0.000}, {-45, -4.249, 4.249}},
    {{180, 6.009, 0.000}, {-90, 0.000, 6.009}},
    {{-30, -5.204, 3.004}, {-90, 0.000, 6.009}},
    {{-90, 0.000, 6.009}, {15, -5.804, -1.555}},
    {{90, 0.000, -6.009}, {-30, -5.204, 3.004}},
    {{180, 6.009, 0.000}, {-45, -4.249, 4.249}, {-10, -5.918, 1.043}},
    {{180, 6.009, 0.000}, {10, -5.918, -1.043}, {45, -4.249, -4.249}},
    {{-10, -5.918, 1.043}, {-45, -4.249, 4.249}, {-90, 0.000, 6.009}},
    {{0, -2.337, 0.000}, {-45, -4.249, 4.249}, {-90, 0.000, 6.009}},
    {{45, -4.249, -4.249}, {90, 0.000, -6.009}, {-90, 0.000, 6.009}},
    {{0, -2.337, 0.000}, {10, -5.918, -1.043}, {-45, -4.249, 4.249}},
    {{-135, 4.249, 4.249}, {-15, -5.804, 1.555}, {-30, -5.204, 3.004}},
    {{15, -5.804, -1.555}, {-15, -5.804, 1.555}, {-135, 4.249, 4.249}},
    {{0, -2.337, 0.000}, {-15, -5.804, 1.555}, {-90, 0.000, 6.009}},
    {{-15, -5.804, 1.555}, {15, -5.804, -1.555}, {-90, 0.000, 6.009}},
    {{0, -2.337, 0.000}, {-45, -4.249, 4.249}, {-90, 0.000, 6.009}},
};

bool scenario_fidelity() {
  const double cruise = dyn::steady_speed(1.8, coeff());
  bool ok = true;

  for (int case_id = 1; case_id <= 22; ++case_id) {
    const auto spec = scen::imazu(case_id, cruise);
    const auto& rows = kGolden[case_id - 1];
    bool case_ok = spec.agents.size() == 1 && spec.ts_inits.size() == rows.size();
    if (case_ok) {
      const auto& os = spec.agents[0];
      case_ok = os.state.x_n == -6.009 * kNauticalMile && os.state.y_n == 0.0 &&
                os.state.psi == 0.0 && os.state.u == cruise &&
                os.goal.x() == 6.009 * kNauticalMile && os.goal.y() == 0.0;
    }
    for (size_t i = 0; case_ok && i < rows.size(); ++i) {
      const auto& ts = spec.ts_inits[i];
      const Vec2 pos(rows[i].n_nm * kNauticalMile, rows[i].e_nm * kNauticalMile);
      case_ok = ts.x_n == pos.x() && ts.y_n == pos.y() &&
                ts.psi == geo::clip_angle(deg2rad(rows[i].phi_deg), 0.0) &&
                ts.u == pos.norm() / 1500.0 && ts.v == 0.0 && ts.r_yaw == 0.0;
    }
    if (!case_ok) {
      ok = false;
      std::printf("  constellation mismatch in case %d\n", case_id);
    }
  }

  for (int j = 1; j <= 24; ++j) {
    const auto spec = scen::around_the_clock(j, cruise);
    const double phi = static_cast<double>(j) / 25.0 * kTwoPi;
    if (std::fabs(geo::clip_angle(spec.ts_inits[0].psi - phi, -kPi)) > 1e-12) {
      ok = false;
      std::printf("  heading mismatch in clock case %d\n", j);
    }
  }
  return ok;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    bool (*run)();
  };
  const Criterion criteria[] = {
      {"risk kernel exactness", risk_kernel_exactness},
      {"cpa closed form vs time-grid oracle", cpa_oracle_equivalence},
      {"encounter table fidelity on a 0.5 degree grid", colreg_table_fidelity},
      {"dynamics operating point, symmetry, convergence", dynamics_sanity},
      {"analytic gradients vs finite differences", gradient_correctness},
      {"desk-scale learning signal (goal-only task)", desk_scale_learning},
      {"vo baseline clears all validation cases", vo_validation},
      {"apf qualitative degradation (reported)", apf_qualitative},
      {"byte-identical reruns of train and validate", determinism},
      {"scenario tables match the published constellations", scenario_fidelity},
  };

  int failures = 0;
  int index = 0;
  for (const auto& c : criteria) {
    ++index;
    const bool ok = c.run();
    std::printf("criterion %2d: %s: %s\n", index, c.name, ok ? "PASS" : "FAIL");
    std::fflush(stdout);
    failures += ok ? 0 : 1;
  }
  return failures;
}
