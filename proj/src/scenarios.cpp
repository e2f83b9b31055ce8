#include "asv/scenarios.hpp"

#include "asv/geo.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace asv::scen {

namespace {

constexpr double kLegSeconds = 25.0 * 60.0;

dyn::ShipState kinematic_ship(const Vec2& pos, double psi, double speed) {
  dyn::ShipState s;
  s.x_n = pos.x();
  s.y_n = pos.y();
  s.psi = geo::clip_angle(psi, 0.0);
  s.u = speed;
  return s;
}

struct TsRow {
  double phi_deg, n_nm, e_nm;
};

// published constellation table; cases 1-4 one TS, 5-11 two, 12-22 three
const std::vector<std::vector<TsRow>> kImazuTable = {
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

}  // namespace

ScenarioSpec around_the_clock(int j, double cruise_speed) {
  if (j < 1 || j > 24)
    throw std::invalid_argument("around_the_clock: case index must be in [1, 24]");
  const double leg = cruise_speed * kLegSeconds;

  ScenarioSpec spec;
  spec.name = "atc_" + std::to_string(j);

  AgentInit os;
  os.state = kinematic_ship(Vec2(-leg, 0.0), 0.0, cruise_speed);
  os.state.rps = 1.8;
  os.goal = Vec2(leg, 0.0);
  spec.agents.push_back(os);

  const double phi = static_cast<double>(j) / 25.0 * kTwoPi;
  const Vec2 ts_pos = -leg * Vec2(std::cos(phi), std::sin(phi));
  auto ts = kinematic_ship(ts_pos, phi, cruise_speed);
  ts.rps = 1.8;
  spec.ts_inits.push_back(ts);
  return spec;
}

ScenarioSpec imazu(int case_id, double cruise_speed) {
  if (case_id < 1 || case_id > 22)
    throw std::invalid_argument("imazu: case index must be in [1, 22]");

  ScenarioSpec spec;
  spec.name = "imazu_" + std::to_string(case_id);

  AgentInit os;
  os.state = kinematic_ship(Vec2(-6.009 * kNauticalMile, 0.0), 0.0, cruise_speed);
  os.state.rps = 1.8;
  os.goal = Vec2(6.009 * kNauticalMile, 0.0);
  spec.agents.push_back(os);

  for (const TsRow& row : kImazuTable[case_id - 1]) {
    const Vec2 pos(row.n_nm * kNauticalMile, row.e_nm * kNauticalMile);
    // every target ship points at the origin and arrives after 25 minutes,
    // so the slow overtaken ships (2.337 NM out) get a proportionally
    // smaller speed
    const double speed = pos.norm() / kLegSeconds;
    spec.ts_inits.push_back(kinematic_ship(pos, deg2rad(row.phi_deg), speed));
  }
  return spec;
}

ScenarioSpec star(int n, double cruise_speed) {
  if (n != 4 && n != 8) throw std::invalid_argument("star: ship count must be 4 or 8");
  const double leg = cruise_speed * kLegSeconds;

  ScenarioSpec spec;
  spec.name = "star_" + std::to_string(n);
  spec.multi_agent = true;
  for (int k = 0; k < n; ++k) {
    const double psi = static_cast<double>(k) * kTwoPi / n;
    const Vec2 dir(std::cos(psi), std::sin(psi));
    AgentInit a;
    a.state = kinematic_ship(-leg * dir, psi, cruise_speed);
    a.state.rps = 1.8;
    a.goal = leg * dir;  // the antipodal ship's spawn point
    spec.agents.push_back(a);
  }
  return spec;
}

namespace {

// hex image of the bits so the text round trip is exact; a human-readable
// decimal rendering follows as a comment
std::string format_real(double v) {
  std::uint64_t bits;
  static_assert(sizeof(bits) == sizeof(v));
  std::memcpy(&bits, &v, sizeof(bits));
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%" PRIx64, bits);
  return buf;
}

double parse_real(const std::string& tok, int line_no) {
  std::uint64_t bits = 0;
  if (std::sscanf(tok.c_str(), "%" SCNx64, &bits) != 1)
    throw ConfigError("scenario line " + std::to_string(line_no) + ": bad number '" + tok + "'");
  double v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

void write_state(std::ostringstream& out, const dyn::ShipState& s) {
  out << format_real(s.x_n) << ' ' << format_real(s.y_n) << ' ' << format_real(s.psi) << ' '
      << format_real(s.u) << ' ' << format_real(s.v) << ' ' << format_real(s.r_yaw) << ' '
      << format_real(s.delta) << ' ' << format_real(s.rps);
}

}  // namespace

std::string serialize(const ScenarioSpec& spec) {
  std::ostringstream out;
  out << "# scenario file: 'agent' lines are x_n y_n psi u v r delta rps goal_n goal_e,\n"
      << "# 'ts' lines drop the two goal fields; reals are hex-encoded doubles\n";
  out << "scenario " << spec.name << "\n";
  out << "multi_agent " << (spec.multi_agent ? 1 : 0) << "\n";
  for (const auto& a : spec.agents) {
    out << "agent ";
    write_state(out, a.state);
    out << ' ' << format_real(a.goal.x()) << ' ' << format_real(a.goal.y()) << "\n";
  }
  for (const auto& ts : spec.ts_inits) {
    out << "ts ";
    write_state(out, ts);
    out << "  # pos (" << ts.x_n << ", " << ts.y_n << ") m, heading "
        << rad2deg(ts.psi) << " deg, " << ts.u << " m/s\n";
  }
  return out.str();
}

ScenarioSpec parse_scenario(const std::string& text) {
  ScenarioSpec spec;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool saw_name = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "scenario") {
      if (!(ls >> spec.name))
        throw ConfigError("scenario line " + std::to_string(line_no) + ": missing name");
      saw_name = true;
    } else if (tag == "multi_agent") {
      int flag = 0;
      if (!(ls >> flag))
        throw ConfigError("scenario line " + std::to_string(line_no) + ": missing flag");
      spec.multi_agent = flag != 0;
    } else if (tag == "agent" || tag == "ts") {
      std::vector<std::string> toks;
      std::string t;
      while (ls >> t) toks.push_back(t);
      const size_t want = tag == "agent" ? 10 : 8;
      if (toks.size() != want)
        throw ConfigError("scenario line " + std::to_string(line_no) + ": expected " +
                          std::to_string(want) + " fields, got " + std::to_string(toks.size()));
      dyn::ShipState s;
      s.x_n = parse_real(toks[0], line_no);
      s.y_n = parse_real(toks[1], line_no);
      s.psi = parse_real(toks[2], line_no);
      s.u = parse_real(toks[3], line_no);
      s.v = parse_real(toks[4], line_no);
      s.r_yaw = parse_real(toks[5], line_no);
      s.delta = parse_real(toks[6], line_no);
      s.rps = parse_real(toks[7], line_no);
      if (tag == "agent") {
        AgentInit a;
        a.state = s;
        a.goal = Vec2(parse_real(toks[8], line_no), parse_real(toks[9], line_no));
        spec.agents.push_back(a);
      } else {
        spec.ts_inits.push_back(s);
      }
    } else {
      throw ConfigError("scenario line " + std::to_string(line_no) + ": unknown tag '" + tag + "'");
    }
  }
  if (!saw_name) throw ConfigError("scenario file: missing 'scenario' line");
  if (spec.agents.empty()) throw ConfigError("scenario file: no agent defined");
  return spec;
}

ScenarioSpec load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

void save_scenario(const ScenarioSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write scenario file: " + path);
  out << serialize(spec);
}

}  // namespace asv::scen
