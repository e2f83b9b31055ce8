#include "asv/risk.hpp"

#include "asv/geo.hpp"

#include <algorithm>
#include <cmath>

namespace asv::risk {

std::pair<double, double> cpa(const Kinematics2D& os, const Kinematics2D& ts) {
  const Vec2 dp = ts.pos - os.pos;
  const Vec2 dv = ts.vel - os.vel;
  const double rel2 = dv.squaredNorm();
  if (rel2 < 1e-12) return {0.0, dp.norm()};
  const double tcpa = -dp.dot(dv) / rel2;
  const double dcpa = (dp + tcpa * dv).norm();
  return {tcpa, dcpa};
}

double domain_radius(const DomainSpec& spec, double alpha) {
  const double a = geo::clip_angle(alpha, 0.0);
  // quarter-ellipse polar radius between adjacent semi-axes
  auto quarter = [](double ax, double bx, double theta) {
    const double ct = std::cos(theta), st = std::sin(theta);
    return ax * bx / std::sqrt(bx * bx * ct * ct + ax * ax * st * st);
  };
  if (a < kPi / 2.0) return quarter(spec.d_bow, spec.d_starboard, a);
  if (a < kPi) return quarter(spec.d_starboard, spec.d_stern, a - kPi / 2.0);
  if (a < 1.5 * kPi) return quarter(spec.d_stern, spec.d_port, a - kPi);
  return quarter(spec.d_port, spec.d_bow, a - 1.5 * kPi);
}

double f_dcpa(double tcpa, double alpha_ts_os_cpa) {
  const double a = std::fabs(geo::clip_angle(alpha_ts_os_cpa, -kPi));
  if (tcpa >= 0.0 && a <= kPi / 6.0) return kC4 - std::exp(kC5 * a);
  return 1.0;
}

double cr_cpa(double tcpa, double dcpa_prime) {
  const double tcpa_weight = tcpa >= 0.0 ? kC2 : kC3;
  return std::exp(kC1 * (dcpa_prime + tcpa_weight * std::fabs(tcpa)));
}

double cr_ed(double distance, double domain_at_bearing) {
  if (distance <= domain_at_bearing) return 1.0;
  return std::exp((distance - domain_at_bearing) / kC6);
}

namespace {

// bearing that tolerates coincident points (forecast positions can meet
// exactly at the CPA when DCPA = 0)
double safe_relative_bearing(const Vec2& from, const Vec2& to, double psi) {
  if ((to - from).norm() < 1e-9) return 0.0;
  return geo::relative_bearing(geo::absolute_bearing(from, to), psi);
}

}  // namespace

RiskAssessment collision_risk(const dyn::ShipState& os, const dyn::ShipState& ts,
                              const DomainSpec& spec) {
  RiskAssessment out;
  const Kinematics2D k_os = kinematics(os), k_ts = kinematics(ts);
  std::tie(out.tcpa, out.dcpa) = cpa(k_os, k_ts);
  if ((k_ts.pos - k_os.pos).norm() < 1e-9) {
    // coincident midships: no bearing geometry exists, risk is saturated
    out.cr = 1.0;
    return out;
  }
  out.sigma = colreg::classify(os, ts);

  // bearings forecast to the CPA under constant course and speed
  const Vec2 p_os = k_os.pos + out.tcpa * k_os.vel;
  const Vec2 p_ts = k_ts.pos + out.tcpa * k_ts.vel;
  const double alpha_os_cpa = safe_relative_bearing(p_os, p_ts, os.psi);
  const double alpha_ts_cpa = safe_relative_bearing(p_ts, p_os, ts.psi);

  out.dcpa_prime = f_dcpa(out.tcpa, alpha_ts_cpa) *
                   std::max(0.0, out.dcpa - domain_radius(spec, alpha_os_cpa));

  const double dist = (k_ts.pos - k_os.pos).norm();
  const double alpha_now = safe_relative_bearing(k_os.pos, k_ts.pos, os.psi);
  const double domain_now = domain_radius(spec, alpha_now);
  if (dist <= domain_now) {
    out.cr = 1.0;
  } else {
    out.cr = std::clamp(
        std::max(cr_cpa(out.tcpa, out.dcpa_prime), cr_ed(dist, domain_now)), 0.0, 1.0);
  }
  return out;
}

}  // namespace asv::risk
