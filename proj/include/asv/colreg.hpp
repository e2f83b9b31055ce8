#pragma once

#include "asv/dynamics.hpp"

namespace asv::colreg {

/// Two-vessel constellation reduced to the quantities the encounter table
/// needs. All angles wrapped to [0, 2pi).
struct EncounterGeometry {
  double alpha_os_ts = 0.0;  // relative bearing OS -> TS [rad]
  double alpha_ts_os = 0.0;  // relative bearing TS -> OS [rad]
  double c_t = 0.0;          // heading intersection angle [rad]
  double u_os_rel = 0.0;     // OS speed projected on the TS course [m/s]
  double u_ts = 0.0;         // TS total speed [m/s]
};

/// Encounter class: 1 head-on, 2 starboard crossing, 3 port crossing,
/// 4 overtaking, 0 none.
struct EncounterClass {
  int sigma = 0;
};

EncounterGeometry make_geometry(const dyn::ShipState& os, const dyn::ShipState& ts);

/// Rows are checked in the order 1, 2, 3, 4 and the first match wins, which
/// resolves the shared interval endpoints deterministically.
EncounterClass classify(const EncounterGeometry& geom);

inline EncounterClass classify(const dyn::ShipState& os, const dyn::ShipState& ts) {
  return classify(make_geometry(os, ts));
}

}  // namespace asv::colreg
