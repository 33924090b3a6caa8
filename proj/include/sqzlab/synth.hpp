#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "sqzlab/cavity.hpp"
#include "sqzlab/data_series.hpp"
#include "sqzlab/decibel.hpp"
#include "sqzlab/photorefraction.hpp"
#include "sqzlab/rng.hpp"
#include "sqzlab/squeezing.hpp"

namespace sqzlab {

// Seeded generators for fit round-trip checks and the bundled datasets.

struct GainSynthConfig {
  double p_threshold_w = 0.060;
  std::vector<double> powers_w;
  double noise_rel = 0.02;            // multiplicative, also used as sigma;
                                      // noiseless runs still carry a nominal weight
  std::vector<double> pm_eff;         // optional per-point mismatch efficiency
  std::uint64_t seed = 7;
};

/// (amplification, deamplification) gain series.
inline std::pair<DataSeries, DataSeries> synth_gain(const GainSynthConfig& cfg) {
  Rng rng(cfg.seed);
  const double weight_rel = cfg.noise_rel > 0.0 ? cfg.noise_rel : 1e-3;
  DataSeries amp, deamp;
  for (std::size_t i = 0; i < cfg.powers_w.size(); ++i) {
    const double p = cfg.powers_w[i];
    double x = pump_ratio(p, cfg.p_threshold_w);
    if (!cfg.pm_eff.empty()) x = effective_pump_ratio(x, cfg.pm_eff[i]);
    const double ga = 1.0 / ((1.0 - x) * (1.0 - x));
    const double gd = 1.0 / ((1.0 + x) * (1.0 + x));
    const double ya = ga * (1.0 + cfg.noise_rel * rng.normal());
    const double yd = gd * (1.0 + cfg.noise_rel * rng.normal());
    amp.x.push_back(p);
    amp.y.push_back(ya);
    amp.sigma.push_back(weight_rel * std::abs(ya));
    deamp.x.push_back(p);
    deamp.y.push_back(yd);
    deamp.sigma.push_back(weight_rel * std::abs(yd));
  }
  return {amp, deamp};
}

struct SqueezingSweepSynthConfig {
  SqueezingModelParams params;
  std::vector<double> powers_w;
  double f_sideband_hz = 5e6;
  double noise_db = 0.09;
  std::uint64_t seed = 11;
};

/// (squeezed, anti-squeezed) dB-vs-pump series including phase noise.
inline std::pair<DataSeries, DataSeries> synth_squeezing_sweep(
    const SqueezingSweepSynthConfig& cfg) {
  Rng rng(cfg.seed);
  const double weight_db = cfg.noise_db > 0.0 ? cfg.noise_db : 1e-3;
  DataSeries sq, asq;
  for (double p : cfg.powers_w) {
    const auto vs = quadrature_variance(cfg.params, p, cfg.f_sideband_hz, Quadrature::squeezed);
    const auto va =
        quadrature_variance(cfg.params, p, cfg.f_sideband_hz, Quadrature::antisqueezed);
    const auto [os, oa] = apply_phase_noise(vs, va, cfg.params.phase_noise_rad);
    sq.x.push_back(p);
    sq.y.push_back(db_from_linear(os.value) + cfg.noise_db * rng.normal());
    sq.sigma.push_back(weight_db);
    asq.x.push_back(p);
    asq.y.push_back(db_from_linear(oa.value) + cfg.noise_db * rng.normal());
    asq.sigma.push_back(weight_db);
  }
  return {sq, asq};
}

struct SpectrumSynthConfig {
  SqueezingModelParams params;
  double p_over_pth = 0.5;
  std::vector<double> freqs_hz;
  double noise_db = 0.1;
  std::uint64_t seed = 13;
};

/// (squeezed, anti-squeezed) dB-vs-sideband-frequency series.
inline std::pair<DataSeries, DataSeries> synth_spectrum(const SpectrumSynthConfig& cfg) {
  Rng rng(cfg.seed);
  const double x = std::sqrt(cfg.p_over_pth);
  const double weight_db = cfg.noise_db > 0.0 ? cfg.noise_db : 1e-3;
  DataSeries sq, asq;
  for (double f : cfg.freqs_hz) {
    const double fr = f / cfg.params.hwhm_hz;
    const auto vs = variance_from_pump_ratio(cfg.params.eta_total, x, fr, Quadrature::squeezed);
    const auto va =
        variance_from_pump_ratio(cfg.params.eta_total, x, fr, Quadrature::antisqueezed);
    const auto [os, oa] = apply_phase_noise(vs, va, cfg.params.phase_noise_rad);
    sq.x.push_back(f);
    sq.y.push_back(db_from_linear(os.value) + cfg.noise_db * rng.normal());
    sq.sigma.push_back(weight_db);
    asq.x.push_back(f);
    asq.y.push_back(db_from_linear(oa.value) + cfg.noise_db * rng.normal());
    asq.sigma.push_back(weight_db);
  }
  return {sq, asq};
}

struct ShiftSynthConfig {
  PhotorefractionModel model;
  CavityGeometry geometry;
  std::vector<double> powers_w;
  double noise_hz = 0.0;
  std::uint64_t seed = 17;
};

/// Resonance-shift-vs-power series.
inline DataSeries synth_shift(const ShiftSynthConfig& cfg) {
  Rng rng(cfg.seed);
  DataSeries out;
  for (double p : cfg.powers_w) {
    out.x.push_back(p);
    out.y.push_back(resonance_shift_hz(cfg.model, cfg.geometry, p) +
                    cfg.noise_hz * rng.normal());
    out.sigma.push_back(cfg.noise_hz > 0.0 ? cfg.noise_hz : 1.0);
  }
  return out;
}

/// Per-point noise std that makes an unweighted straight-line fit over the
/// given abscissae report the requested slope standard error.
inline double noise_for_slope_stderr(const std::vector<double>& xs, double slope_err) {
  const double n = static_cast<double>(xs.size());
  double sx = 0, sxx = 0;
  for (double v : xs) {
    sx += v;
    sxx += v * v;
  }
  return slope_err * std::sqrt((n * sxx - sx * sx) / n);
}

}  // namespace sqzlab
