#include "asv/colreg.hpp"

#include "asv/geo.hpp"

#include <cmath>

namespace asv::colreg {

EncounterGeometry make_geometry(const dyn::ShipState& os, const dyn::ShipState& ts) {
  EncounterGeometry g;
  g.alpha_os_ts = geo::relative_bearing(
      geo::absolute_bearing(os.position(), ts.position()), os.psi);
  g.alpha_ts_os = geo::relative_bearing(
      geo::absolute_bearing(ts.position(), os.position()), ts.psi);
  g.c_t = geo::heading_intersection(os.psi, ts.psi);
  const double chi_ts = ts.course();
  const Vec2 ts_course_dir(std::cos(chi_ts), std::sin(chi_ts));
  g.u_os_rel = os.ground_velocity().dot(ts_course_dir);
  g.u_ts = ts.total_speed();
  return g;
}

namespace {

bool in_deg(double angle_rad, double lo_deg, double hi_deg) {
  const double a = rad2deg(angle_rad);
  return a >= lo_deg && a <= hi_deg;
}

}  // namespace

EncounterClass classify(const EncounterGeometry& g) {
  const double a_os = g.alpha_os_ts;
  const double a_ts = g.alpha_ts_os;
  const double ct = g.c_t;

  // head-on
  if ((in_deg(a_os, 0.0, 5.0) || in_deg(a_os, 355.0, 360.0)) && in_deg(ct, 175.0, 185.0))
    return {1};
  // starboard crossing
  if (in_deg(a_os, 5.0, 112.5) && in_deg(ct, 185.0, 292.5)) return {2};
  // port crossing
  if (in_deg(a_os, 247.5, 355.0) && in_deg(ct, 67.5, 175.0)) return {3};
  // overtaking
  if (in_deg(a_ts, 112.5, 247.5) &&
      (in_deg(ct, 0.0, 67.5) || in_deg(ct, 292.5, 360.0)) && g.u_os_rel > g.u_ts)
    return {4};
  return {0};
}

}  // namespace asv::colreg
