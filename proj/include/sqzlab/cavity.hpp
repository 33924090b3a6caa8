#pragma once

#include <cmath>
#include <numbers>

#include "sqzlab/constants.hpp"
#include "sqzlab/errors.hpp"

namespace sqzlab {

/// Waveguide resonator description. Defaults describe the 12 mm Ti:PPLN
/// device: 10 dB/m propagation loss, >99 % high reflector, 64 % output
/// coupler. n_eff is the extraordinary index near 1550 nm and is a
/// configuration value, not a measurement; reports flag it as an assumption.
struct CavityGeometry {
  double length_m = 0.012;
  double n_eff = 2.14;
  double alpha_db_per_m = 10.0;
  double r_hr = 0.99;  // power reflectivity, high reflector
  double r_pr = 0.64;  // power reflectivity, output coupler

  void validate() const {
    if (!(length_m > 0.0)) throw invalid_geometry_error("cavity: length must be > 0");
    if (!(n_eff >= 1.0)) throw invalid_geometry_error("cavity: n_eff must be >= 1");
    if (!(alpha_db_per_m >= 0.0)) throw invalid_geometry_error("cavity: alpha must be >= 0");
    if (!(r_pr > 0.0 && r_pr <= r_hr && r_hr <= 1.0))
      throw invalid_geometry_error("cavity: need 0 < r_pr <= r_hr <= 1");
  }
};

struct DerivedCavity {
  double fsr_hz = 0.0;
  double finesse = 0.0;
  double fwhm_hz = 0.0;
  double hwhm_hz = 0.0;
  double escape_eta = 0.0;
};

/// Round-trip power survival factor, 10^(-2*alpha*L/10).
inline double round_trip_survival(const CavityGeometry& g) {
  return std::pow(10.0, -2.0 * g.alpha_db_per_m * g.length_m / 10.0);
}

/// FSR, finesse, linewidth and escape efficiency from mirror reflectivities
/// and propagation loss. Escape efficiency weighs the loss channels by their
/// round-trip decay rates -ln(R); for small transmissions this reduces to
/// T_pr / (T_pr + loss + T_hr).
inline DerivedCavity derive_cavity(const CavityGeometry& geo) {
  geo.validate();
  const double survival = round_trip_survival(geo);
  const double g = std::sqrt(geo.r_hr * geo.r_pr * survival);
  if (!(g < 1.0))
    throw invalid_geometry_error("cavity: round-trip gain >= 1, no resonance decay");

  DerivedCavity out;
  out.fsr_hz = speed_of_light / (2.0 * geo.n_eff * geo.length_m);
  out.finesse = std::numbers::pi * std::sqrt(g) / (1.0 - g);
  out.fwhm_hz = out.fsr_hz / out.finesse;
  out.hwhm_hz = 0.5 * out.fwhm_hz;

  const double k_out = -std::log(geo.r_pr);
  const double k_hr = -std::log(geo.r_hr);
  const double k_loss = -std::log(survival);
  out.escape_eta = k_out / (k_out + k_hr + k_loss);
  return out;
}

}  // namespace sqzlab
