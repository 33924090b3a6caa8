#pragma once

#include <cmath>

#include "sqzlab/cavity.hpp"
#include "sqzlab/constants.hpp"

namespace sqzlab {

/// Phenomenological pump-power dependence of the effective index.
/// c_pr is the photorefractive coefficient (negative for this device);
/// thermo_c carries the opposite-signed thermo-optic term that dominates at
/// very low power. Both are index change per watt; the normalization is an
/// assumption recorded in reports.
struct PhotorefractionModel {
  double c_pr_per_w = -3.97e-3;
  double thermo_c_per_w = 0.0;
};

/// Quasi-phase-matching state. kappa_t and slope_s have no measured values
/// and default to 0 (disabled); set them for temperature-sweep studies.
struct PhaseMatching {
  double t_pm0_c = 140.5;        // phase-matching temperature at zero power
  double kappa_t_rad_per_m_c = 0.0;  // mismatch slope d(dk)/dT
  double slope_s_c_per_w = 0.0;      // power-induced shift of the matching temperature
  double length_m = 0.012;
};

inline double index_shift(const PhotorefractionModel& m, double p_pump_w) {
  if (!(p_pump_w >= 0.0)) throw std::domain_error("index_shift: pump must be >= 0");
  return (m.c_pr_per_w + m.thermo_c_per_w) * p_pump_w;
}

/// Cavity resonance shift from the index change; a negative dn blueshifts.
inline double resonance_shift_hz(const PhotorefractionModel& m, const CavityGeometry& geo,
                                 double p_pump_w) {
  geo.validate();
  return -carrier_frequency_hz * index_shift(m, p_pump_w) / geo.n_eff;
}

inline double sinc(double u) { return u == 0.0 ? 1.0 : std::sin(u) / u; }

/// sinc^2 phase-matching efficiency at the given oven temperature and pump
/// power; the matching temperature itself moves by slope_s per watt.
inline double pm_efficiency(const PhaseMatching& pm, double temperature_c, double p_pump_w) {
  if (!(pm.length_m > 0.0)) throw std::domain_error("pm_efficiency: length must be > 0");
  const double t_match = pm.t_pm0_c + pm.slope_s_c_per_w * p_pump_w;
  const double half_mismatch =
      pm.kappa_t_rad_per_m_c * (temperature_c - t_match) * pm.length_m / 2.0;
  const double s = sinc(half_mismatch);
  return s * s;
}

/// Mismatch-corrected pump amplitude fed to gain/variance models.
inline double effective_pump_ratio(double x, double pm_eff) {
  if (!(x >= 0.0)) throw std::domain_error("effective_pump_ratio: x must be >= 0");
  if (!(pm_eff >= 0.0 && pm_eff <= 1.0))
    throw std::domain_error("effective_pump_ratio: pm_eff must be in [0,1]");
  return x * std::sqrt(pm_eff);
}

}  // namespace sqzlab
