#pragma once

#include "asv/colreg.hpp"
#include "asv/dynamics.hpp"

namespace asv::risk {

struct Kinematics2D {
  Vec2 pos = Vec2::Zero();  // NED position [m]
  Vec2 vel = Vec2::Zero();  // velocity over ground [m/s]
};

/// Four-quarter-ellipse ship domain, asymmetric with the larger axes ahead
/// and to starboard.
struct DomainSpec {
  double d_bow = 960.0;        // 3 L_pp
  double d_starboard = 960.0;  // 3 L_pp
  double d_stern = 320.0;      // L_pp
  double d_port = 320.0;       // L_pp
};

struct RiskAssessment {
  double tcpa = 0.0;        // signed [s]
  double dcpa = 0.0;        // [m]
  double dcpa_prime = 0.0;  // domain- and bow-crossing-adjusted DCPA [m]
  colreg::EncounterClass sigma;
  double cr = 0.0;          // unified collision risk in [0, 1]
};

// calibration constants (KVLCC2-specific)
inline const double kC1 = std::log(0.1) / 3704.0;
constexpr double kC2 = 1.5;
constexpr double kC3 = 20.0;
constexpr double kC4 = 1.2;
inline const double kC5 = -std::log(5.0) / (kPi / 6.0);
constexpr double kC6 = -0.3 * 3704.0;

/// Closed-form CPA. Zero relative velocity degenerates to
/// (tcpa = 0, dcpa = current distance).
std::pair<double, double> cpa(const Kinematics2D& os, const Kinematics2D& ts);

inline Kinematics2D kinematics(const dyn::ShipState& s) {
  return {s.position(), s.ground_velocity()};
}

/// Radius of the domain boundary at relative bearing alpha; continuous and
/// 2pi-periodic, max 3 L_pp ahead/starboard, min L_pp astern/port.
double domain_radius(const DomainSpec& spec, double alpha);

/// Bow-crossing penalty factor in [0.2, 1.2]; 1 outside the active wedge.
double f_dcpa(double tcpa, double alpha_ts_os_cpa);

/// CPA-based risk component, exponential in DCPA' and |TCPA| with
/// asymmetric decay before/after the CPA.
double cr_cpa(double tcpa, double dcpa_prime);

/// Euclidean-distance risk component, capped at 1 inside the domain.
double cr_ed(double distance, double domain_at_bearing);

/// Full unified metric: 1 if the TS midship is at or inside the OS domain,
/// max of the two components otherwise.
RiskAssessment collision_risk(const dyn::ShipState& os, const dyn::ShipState& ts,
                              const DomainSpec& spec = DomainSpec{});

}  // namespace asv::risk
