#pragma once

#include "asv/common.hpp"

namespace asv::geo {

/// Wraps theta into [a, a+2pi) via the floor formula; the result differs
/// from theta by an exact integer multiple of 2pi. `a` is -pi or 0 at
/// every call site in this codebase, but any finite `a` works.
double clip_angle(double theta, double a);

/// Bearing of (to - from), clockwise from north, in [0, 2pi).
/// Coincident points have no bearing and raise std::domain_error.
double absolute_bearing(const Vec2& from, const Vec2& to);

/// Bearing relative to own heading: [beta_abs - psi] wrapped to [0, 2pi).
double relative_bearing(double beta_abs, double psi);

/// Heading intersection angle C_T = [psi_ts - psi_os] in [0, 2pi).
double heading_intersection(double psi_os, double psi_ts);

}  // namespace asv::geo
