#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sqzlab/decibel.hpp"
#include "sqzlab/errors.hpp"

namespace sqzlab {

/// Shot-noise-normalized quadrature variance; vacuum = 1.
struct QuadratureVariance {
  double value = 1.0;
};

/// The four parameters governing the measured quadrature variances.
/// hwhm_hz is the cavity decay bandwidth expressed as half-linewidth in Hz;
/// the conventional FWHM quote is 2*hwhm_hz.
struct SqueezingModelParams {
  double eta_total = 0.62;      // total efficiency, escape through detection
  double p_threshold_w = 0.060;
  double hwhm_hz = 100e6;
  double phase_noise_rad = 0.020;  // Gaussian std of the quadrature angle

  void validate() const {
    if (!(eta_total >= 0.0 && eta_total <= 1.0))
      throw std::domain_error("params: eta_total must be in [0,1]");
    if (!(p_threshold_w > 0.0)) throw std::domain_error("params: p_threshold must be > 0");
    if (!(hwhm_hz > 0.0)) throw std::domain_error("params: hwhm must be > 0");
    if (!(phase_noise_rad >= 0.0)) throw std::domain_error("params: phase_noise must be >= 0");
  }
};

enum class GainBranch { amplify, deamplify };
enum class Quadrature { squeezed, antisqueezed };

/// Normalized pump amplitude x = sqrt(P/P_th).
inline double pump_ratio(double p_pump_w, double p_threshold_w) {
  if (!(p_threshold_w > 0.0)) throw std::domain_error("pump_ratio: threshold must be > 0");
  if (!(p_pump_w >= 0.0)) throw std::domain_error("pump_ratio: pump must be >= 0");
  return std::sqrt(p_pump_w / p_threshold_w);
}

/// Classical parametric (de)amplification G = 1/(1 -/+ x)^2.
inline double classical_gain(double p_pump_w, double p_threshold_w, GainBranch branch) {
  const double x = pump_ratio(p_pump_w, p_threshold_w);
  if (branch == GainBranch::amplify) {
    if (x >= 1.0)
      throw above_threshold_error("classical_gain: pump at or above threshold");
    return 1.0 / ((1.0 - x) * (1.0 - x));
  }
  return 1.0 / ((1.0 + x) * (1.0 + x));
}

/// V(f) = 1 -/+ eta * 4x / ((1 +/- x)^2 + (f/hwhm)^2) in terms of the
/// normalized pump amplitude; squeezed takes the minus sign.
inline QuadratureVariance variance_from_pump_ratio(double eta, double x, double f_over_hwhm,
                                                   Quadrature quad) {
  if (x >= 1.0) throw above_threshold_error("quadrature_variance: pump at or above threshold");
  const double f2 = f_over_hwhm * f_over_hwhm;
  if (quad == Quadrature::squeezed)
    return {1.0 - eta * 4.0 * x / ((1.0 + x) * (1.0 + x) + f2)};
  return {1.0 + eta * 4.0 * x / ((1.0 - x) * (1.0 - x) + f2)};
}

inline QuadratureVariance quadrature_variance(const SqueezingModelParams& params,
                                              double p_pump_w, double f_sideband_hz,
                                              Quadrature quad) {
  params.validate();
  if (!(f_sideband_hz >= 0.0))
    throw std::domain_error("quadrature_variance: sideband frequency must be >= 0");
  const double x = pump_ratio(p_pump_w, params.p_threshold_w);
  return variance_from_pump_ratio(params.eta_total, x, f_sideband_hz / params.hwhm_hz, quad);
}

/// Gaussian quadrature-angle jitter of std sigma mixes the two variances:
/// observed V_sq = V_sq E[cos^2 t] + V_asq E[sin^2 t] with
/// E[cos^2 t] = (1 + exp(-2 sigma^2)) / 2, and symmetrically for V_asq.
inline std::pair<QuadratureVariance, QuadratureVariance> apply_phase_noise(
    QuadratureVariance v_sq, QuadratureVariance v_asq, double sigma_rad) {
  if (!(sigma_rad >= 0.0)) throw std::domain_error("apply_phase_noise: sigma must be >= 0");
  const double c2 = 0.5 * (1.0 + std::exp(-2.0 * sigma_rad * sigma_rad));
  const double s2 = 1.0 - c2;
  return {{v_sq.value * c2 + v_asq.value * s2}, {v_asq.value * c2 + v_sq.value * s2}};
}

/// Beam-splitter loss channel: v' = eta v + (1 - eta).
inline QuadratureVariance apply_loss(QuadratureVariance v, double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::domain_error("apply_loss: eta must be in [0,1]");
  return {eta * v.value + (1.0 - eta)};
}

/// Ordered multiplicative efficiency budget from resonator output to
/// detected variance.
struct EfficiencyChain {
  struct Entry {
    std::string name;
    double eta = 1.0;
  };
  std::vector<Entry> entries;
};

inline double chain_total(const EfficiencyChain& chain) {
  double total = 1.0;
  for (const auto& e : chain.entries) {
    if (!(e.eta > 0.0 && e.eta <= 1.0))
      throw std::domain_error("chain_total: entry '" + e.name + "' outside (0,1]");
    total *= e.eta;
  }
  return total;
}

/// Solves the one entry marked unknown (nullopt) so the chain multiplies out
/// to target_total.
inline double chain_solve_missing(
    const std::vector<std::pair<std::string, std::optional<double>>>& entries,
    double target_total) {
  if (!(target_total > 0.0 && target_total <= 1.0))
    throw std::domain_error("chain_solve_missing: target must be in (0,1]");
  double known = 1.0;
  int unknowns = 0;
  for (const auto& [name, eta] : entries) {
    if (!eta) {
      ++unknowns;
      continue;
    }
    if (!(*eta > 0.0 && *eta <= 1.0))
      throw std::domain_error("chain_solve_missing: entry '" + name + "' outside (0,1]");
    known *= *eta;
  }
  if (unknowns != 1)
    throw under_determined_error("chain_solve_missing: need exactly one unknown entry, got " +
                                 std::to_string(unknowns));
  return target_total / known;
}

/// Near-threshold, zero-sideband squeezing bound, 10 log10(1 - eta).
inline double asymptotic_squeezing_db(double eta_total) {
  if (!(eta_total >= 0.0 && eta_total < 1.0))
    throw std::domain_error("asymptotic_squeezing_db: eta must be in [0,1)");
  return db_from_linear(1.0 - eta_total);
}

struct VariancePairInversion {
  double eta_total = 0.0;
  double pump_ratio = 0.0;  // x
};

/// Closed-form inversion of a zero-sideband (V+, V-) pair:
/// (V+ - 1)/(1 - V-) = ((1+x)/(1-x))^2 fixes x, then V+ fixes eta.
inline VariancePairInversion invert_variance_pair(QuadratureVariance v_asq,
                                                  QuadratureVariance v_sq) {
  if (!(v_asq.value > 1.0 && v_sq.value < 1.0 && v_sq.value > 0.0))
    throw std::domain_error("invert_variance_pair: need V- in (0,1) and V+ > 1");
  const double s = std::sqrt((v_asq.value - 1.0) / (1.0 - v_sq.value));
  const double x = (s - 1.0) / (s + 1.0);
  const double eta = (v_asq.value - 1.0) * (1.0 - x) * (1.0 - x) / (4.0 * x);
  return {eta, x};
}

}  // namespace sqzlab
