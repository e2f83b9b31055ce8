#include "asv/geo.hpp"

#include <cmath>
#include <stdexcept>

namespace asv::geo {

double clip_angle(double theta, double a) {
  if (!std::isfinite(theta) || !std::isfinite(a))
    throw std::domain_error("clip_angle: non-finite input");
  double r = theta - std::floor((theta - a) / kTwoPi) * kTwoPi;
  // floating-point edge: (theta-a)/2pi just below an integer can land on a+2pi
  if (r >= a + kTwoPi) r = a;
  return r;
}

double absolute_bearing(const Vec2& from, const Vec2& to) {
  const Vec2 d = to - from;
  if (d.x() == 0.0 && d.y() == 0.0)
    throw std::domain_error("absolute_bearing: coincident points");
  return clip_angle(std::atan2(d.y(), d.x()), 0.0);
}

double relative_bearing(double beta_abs, double psi) {
  return clip_angle(beta_abs - psi, 0.0);
}

double heading_intersection(double psi_os, double psi_ts) {
  return clip_angle(psi_ts - psi_os, 0.0);
}

}  // namespace asv::geo
