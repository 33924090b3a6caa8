#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sqzlab/cavity.hpp"
#include "sqzlab/constants.hpp"
#include "sqzlab/data_series.hpp"
#include "sqzlab/decibel.hpp"
#include "sqzlab/fit.hpp"
#include "sqzlab/photorefraction.hpp"
#include "sqzlab/squeezing.hpp"

namespace sqzlab {

// Model adapters binding the generic engine to the four measured curves.
// Variance fits run on dB residuals, gain fits on linear gains. Phase noise
// is fitted as sigma^2 ("phase_noise_sq"): the variances are even in sigma,
// so sigma itself carries no gradient at zero while sigma^2 stays regular;
// the reports expose the root as the derived "phase_noise" entry.

namespace detail {

inline double safe_db(double v) {
  return v > 0.0 ? 10.0 * std::log10(v) : std::numeric_limits<double>::quiet_NaN();
}

/// Observed (squeezed, anti-squeezed) pair in dB with phase-noise mixing
/// given as sigma^2; NaN when the point is unphysical so the engine rejects
/// the step. Slightly negative sigma^2 is admitted, the mixing formula is
/// analytic there.
inline std::pair<double, double> observed_pair_db(double eta, double x, double f_over_hwhm,
                                                  double sigma_sq) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  if (!(x >= 0.0) || x >= 1.0 || !(eta >= 0.0 && eta <= 1.0)) return {nan, nan};
  const double f2 = f_over_hwhm * f_over_hwhm;
  const double vs = 1.0 - eta * 4.0 * x / ((1.0 + x) * (1.0 + x) + f2);
  const double va = 1.0 + eta * 4.0 * x / ((1.0 - x) * (1.0 - x) + f2);
  const double c2 = 0.5 * (1.0 + std::exp(-2.0 * sigma_sq));
  const double s2 = 1.0 - c2;
  return {safe_db(vs * c2 + va * s2), safe_db(va * c2 + vs * s2)};
}

inline double max_abscissa(const DataSeries& a, const DataSeries& b) {
  double m = 0.0;
  for (double v : a.x) m = std::max(m, v);
  for (double v : b.x) m = std::max(m, v);
  return m;
}

// Post-fit identifiability check on the unscaled covariance: a parameter
// whose 1-sigma at the stated noise level spans its whole domain was never
// determined by the data.
inline void check_identified(const FitReport& report,
                             const std::vector<std::pair<std::string, double>>& limits) {
  std::vector<std::string> loose;
  std::string desc;
  for (const auto& [name, limit] : limits) {
    const auto k = report.index_of(name);
    const double err = std::sqrt(std::max(report.covariance_unscaled(k, k), 0.0));
    if (err > limit) {
      loose.push_back(name);
      desc += (desc.empty() ? "" : ", ") + name;
    }
  }
  if (!loose.empty())
    throw rank_deficiency_error("fit: data do not determine: " + desc, loose);
}

}  // namespace detail

struct GainFitOptions {
  std::vector<double> pm_eff_amp;   // optional per-point mismatch correction
  std::vector<double> pm_eff_deamp;
  double sigma_rel_default = 0.02;  // applied when a series carries no sigma
  FitOptions engine;
};

/// Residuals of the simultaneous G+- fit; theta = [p_threshold].
inline ResidualFn gain_residual(const DataSeries& amp, const DataSeries& deamp,
                                const GainFitOptions& opts = {}) {
  const DataSeries a = amp.with_default_relative_sigma(opts.sigma_rel_default);
  const DataSeries d = deamp.with_default_relative_sigma(opts.sigma_rel_default);
  const auto pm_a = opts.pm_eff_amp;
  const auto pm_d = opts.pm_eff_deamp;
  if (!pm_a.empty() && pm_a.size() != a.size())
    throw std::invalid_argument("fit_gain: pm_eff_amp length mismatch");
  if (!pm_d.empty() && pm_d.size() != d.size())
    throw std::invalid_argument("fit_gain: pm_eff_deamp length mismatch");
  return [a, d, pm_a, pm_d](std::span<const double> th) {
    const double pth = th[0];
    std::vector<double> r;
    r.reserve(a.size() + d.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      double x = std::sqrt(a.x[i] / pth);
      if (!pm_a.empty()) x = effective_pump_ratio(x, pm_a[i]);
      const double g = x < 1.0 ? 1.0 / ((1.0 - x) * (1.0 - x))
                               : std::numeric_limits<double>::quiet_NaN();
      r.push_back((a.y[i] - g) / a.sigma[i]);
    }
    for (std::size_t i = 0; i < d.size(); ++i) {
      double x = std::sqrt(d.x[i] / pth);
      if (!pm_d.empty()) x = effective_pump_ratio(x, pm_d[i]);
      const double g = 1.0 / ((1.0 + x) * (1.0 + x));
      r.push_back((d.y[i] - g) / d.sigma[i]);
    }
    return r;
  };
}

/// Simultaneous fit of classical (de)amplification against pump power;
/// single parameter "p_threshold".
inline FitReport fit_gain(const DataSeries& amp, const DataSeries& deamp,
                          const GainFitOptions& opts = {}) {
  if (amp.empty() || deamp.empty())
    throw std::invalid_argument("fit_gain: both branches required");
  auto residual = gain_residual(amp, deamp, opts);
  const double p_max = detail::max_abscissa(amp, deamp);

  // Initial threshold from the largest amplification gain.
  double g_max = 1.0, p_at_max = p_max;
  for (std::size_t i = 0; i < amp.size(); ++i)
    if (amp.y[i] > g_max) {
      g_max = amp.y[i];
      p_at_max = amp.x[i];
    }
  double init = 4.0 * p_max;
  if (g_max > 1.0) {
    const double x0 = 1.0 - 1.0 / std::sqrt(g_max);
    if (x0 > 0.05) init = p_at_max / (x0 * x0);
  }
  const double lower = p_max * (1.0 + 1e-9);
  init = std::max(init, 2.0 * lower);

  return fit_least_squares(
      residual, {{"p_threshold", init, lower, std::numeric_limits<double>::infinity()}},
      opts.engine);
}

struct SqueezingPairFitOptions {
  double f_sideband_hz = 5e6;
  double hwhm_hz = 100e6;
  std::optional<double> fixed_phase_noise;  // radians; unset = free parameter
  double sigma_db_default = 0.09;
  FitOptions engine;
};

/// Residuals of the simultaneous squeezing/anti-squeezing fit in dB;
/// theta = [eta_total, p_threshold_w, phase_noise_sq] (last one only when
/// the phase noise is free).
inline ResidualFn squeezing_pair_residual(const DataSeries& sq, const DataSeries& asq,
                                          const SqueezingPairFitOptions& opts = {}) {
  if (!(opts.hwhm_hz > 0.0))
    throw std::invalid_argument("fit_squeezing_pair: hwhm must be > 0");
  const DataSeries s = sq.with_default_sigma(opts.sigma_db_default);
  const DataSeries c = asq.with_default_sigma(opts.sigma_db_default);
  const double f_over = opts.f_sideband_hz / opts.hwhm_hz;
  const std::optional<double> fixed = opts.fixed_phase_noise;
  return [s, c, f_over, fixed](std::span<const double> th) {
    const double eta = th[0];
    const double pth = th[1];
    const double q = fixed ? (*fixed) * (*fixed) : th[2];
    std::vector<double> r;
    r.reserve(s.size() + c.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double x = std::sqrt(s.x[i] / pth);
      r.push_back((s.y[i] - detail::observed_pair_db(eta, x, f_over, q).first) / s.sigma[i]);
    }
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double x = std::sqrt(c.x[i] / pth);
      r.push_back((c.y[i] - detail::observed_pair_db(eta, x, f_over, q).second) / c.sigma[i]);
    }
    return r;
  };
}

/// Shared-parameter fit of both variance branches against pump power.
/// Parameters: eta_total, p_threshold and (unless fixed) phase_noise_sq;
/// derived entries report the root as phase_noise.
inline FitReport fit_squeezing_pair(const DataSeries& sq, const DataSeries& asq,
                                    const SqueezingPairFitOptions& opts = {}) {
  if (sq.empty() && asq.empty()) throw std::invalid_argument("fit_squeezing_pair: no data");
  auto residual = squeezing_pair_residual(sq, asq, opts);
  const double p_max = detail::max_abscissa(sq, asq);

  // Seed from the closed-form inversion of the highest-power pair when both
  // series cover it, otherwise fall back to generic starting values.
  double eta0 = 0.5, pth0 = 4.0 * p_max;
  if (!sq.empty() && !asq.empty()) {
    const auto i = std::distance(sq.x.begin(), std::max_element(sq.x.begin(), sq.x.end()));
    const auto j = std::distance(asq.x.begin(), std::max_element(asq.x.begin(), asq.x.end()));
    const double vs = linear_from_db(sq.y[i]), va = linear_from_db(asq.y[j]);
    if (vs < 1.0 && vs > 0.0 && va > 1.0) {
      const auto inv = invert_variance_pair({va}, {vs});
      if (inv.eta_total > 0.01 && inv.eta_total < 0.999 && inv.pump_ratio > 0.01 &&
          inv.pump_ratio < 0.99) {
        eta0 = inv.eta_total;
        pth0 = sq.x[i] / (inv.pump_ratio * inv.pump_ratio);
      }
    }
  }
  const double lower_pth = p_max * (1.0 + 1e-9);
  pth0 = std::max(pth0, 2.0 * lower_pth);

  std::vector<FitParam> params{
      {"eta_total", std::clamp(eta0, 0.05, 0.95), 0.0, 1.0},
      {"p_threshold", pth0, lower_pth, std::numeric_limits<double>::infinity()}};
  const bool free_sigma = !opts.fixed_phase_noise.has_value();
  if (free_sigma) params.push_back({"phase_noise_sq", 2.25e-4});

  FitReport report = fit_least_squares(residual, params, opts.engine);
  detail::check_identified(report, {{"eta_total", 1.0},
                                    {"p_threshold", 10.0 * report.value("p_threshold")}});
  if (free_sigma)
    report.derived.emplace_back("phase_noise",
                                std::sqrt(std::max(report.value("phase_noise_sq"), 0.0)));
  return report;
}

struct SpectrumFitOptions {
  double p_over_pth = 0.5;
  std::optional<double> fixed_phase_noise;
  double sigma_db_default = 0.09;
  FitOptions engine;
};

/// Residuals of the variance-spectrum fit; theta = [eta_total, hwhm_hz,
/// phase_noise_sq] (last one only when the phase noise is free).
inline ResidualFn spectrum_residual(const DataSeries& sq, const DataSeries& asq,
                                    const SpectrumFitOptions& opts = {}) {
  if (!(opts.p_over_pth > 0.0 && opts.p_over_pth < 1.0))
    throw std::invalid_argument("fit_spectrum: p/pth must be in (0,1)");
  const DataSeries s = sq.with_default_sigma(opts.sigma_db_default);
  const DataSeries c = asq.with_default_sigma(opts.sigma_db_default);
  const double x = std::sqrt(opts.p_over_pth);
  const std::optional<double> fixed = opts.fixed_phase_noise;
  return [s, c, x, fixed](std::span<const double> th) {
    const double eta = th[0];
    const double hwhm = th[1];
    const double q = fixed ? (*fixed) * (*fixed) : th[2];
    std::vector<double> r;
    r.reserve(s.size() + c.size());
    for (std::size_t i = 0; i < s.size(); ++i)
      r.push_back((s.y[i] - detail::observed_pair_db(eta, x, s.x[i] / hwhm, q).first) /
                  s.sigma[i]);
    for (std::size_t i = 0; i < c.size(); ++i)
      r.push_back((c.y[i] - detail::observed_pair_db(eta, x, c.x[i] / hwhm, q).second) /
                  c.sigma[i]);
    return r;
  };
}

/// Simultaneous fit over sideband frequency at fixed pump ratio.
/// Parameters: eta_total, hwhm and (unless fixed) phase_noise_sq; derived
/// entries carry fwhm = 2*hwhm and the root phase_noise.
inline FitReport fit_spectrum(const DataSeries& sq, const DataSeries& asq,
                              const SpectrumFitOptions& opts = {}) {
  if (sq.empty() && asq.empty()) throw std::invalid_argument("fit_spectrum: no data");
  auto residual = spectrum_residual(sq, asq, opts);

  double f_hi = 0.0;
  for (double f : sq.x) f_hi = std::max(f_hi, f);
  for (double f : asq.x) f_hi = std::max(f_hi, f);

  std::vector<FitParam> params{
      {"eta_total", 0.5, 0.0, 1.0},
      {"hwhm", 0.3 * f_hi, 0.0, std::numeric_limits<double>::infinity()}};
  const bool free_sigma = !opts.fixed_phase_noise.has_value();
  if (free_sigma) params.push_back({"phase_noise_sq", 2.25e-4});

  FitReport report = fit_least_squares(residual, params, opts.engine);
  detail::check_identified(report,
                           {{"eta_total", 1.0}, {"hwhm", 10.0 * report.value("hwhm")}});
  const double hwhm = report.value("hwhm");
  if (f_hi < hwhm / 2.0)
    throw fit_error("fit_spectrum: frequency span below fitted hwhm/2, result unreliable");
  report.derived.emplace_back("fwhm", 2.0 * hwhm);
  if (free_sigma)
    report.derived.emplace_back("phase_noise",
                                std::sqrt(std::max(report.value("phase_noise_sq"), 0.0)));
  return report;
}

/// Straight-line fit of resonance shift against pump power, reporting the
/// implied photorefraction coefficient dn/dP alongside the raw slope.
inline FitReport fit_shift(const DataSeries& shifts, const CavityGeometry& geometry) {
  geometry.validate();
  FitReport report = linfit(shifts);
  const double to_cpr = -geometry.n_eff / carrier_frequency_hz;
  report.derived.emplace_back("c_pr", report.value("slope") * to_cpr);
  report.derived.emplace_back("c_pr_err", report.error_of("slope") * std::abs(to_cpr));
  return report;
}

}  // namespace sqzlab
