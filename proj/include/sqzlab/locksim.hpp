#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <thread>
#include <utility>
#include <vector>

#include "sqzlab/cavity.hpp"
#include "sqzlab/errors.hpp"
#include "sqzlab/rng.hpp"

namespace sqzlab {

// Time-domain simulation of the dither locks and the fiber auto-alignment.
// Runs are deterministic for a given seed; independent runs may execute in
// parallel.

struct LockLoopConfig {
  double f_mod_hz = 60e3;
  double mod_depth_rad = 0.1;
  double demod_phase_rad = 0.0;
  double lpf_cutoff_hz = 1e3;   // demod output filter, two cascaded poles
  double kp = 0.0;              // proportional gain; the dither servo is integrator-led
  double ki = 600.0;            // 1/s, acts on the Hz-normalized error
  double sample_rate_hz = 1e6;
  double duration_s = 2.0;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(sample_rate_hz > 0.0 && duration_s > 0.0))
      throw config_error("lock config: sample rate and duration must be > 0");
    if (!(f_mod_hz > 0.0 && f_mod_hz < sample_rate_hz / 4.0))
      throw config_error("lock config: need f_mod < sample_rate/4");
    if (!(lpf_cutoff_hz > 0.0 && lpf_cutoff_hz < f_mod_hz / 10.0))
      throw config_error("lock config: need lpf_cutoff < f_mod/10");
    if (duration_s * sample_rate_hz > 1e8)
      throw config_error("lock config: sample count exceeds 1e8 cap");
    if (!(mod_depth_rad > 0.0)) throw config_error("lock config: mod_depth must be > 0");
  }
};

struct DriftModel {
  double rw_sigma_hz = 2e6;        // detuning random walk, Hz per sqrt(s)
  double ramp_hz_per_s = 0.0;
  double pr_gain_hz_per_w = 2e10;  // blueshift per watt of intracavity power
  double pr_tau_s = 0.001;         // photorefractive relaxation time
  // Fiber-to-waveguide coupling fluctuations modulating the intracavity
  // power: an Ornstein-Uhlenbeck process with the given stationary relative
  // std and correlation time. This is what makes the lock failure
  // power-dependent.
  double coupling_sigma_rel = 0.05;
  double coupling_tau_s = 0.001;

  void validate() const {
    if (!(rw_sigma_hz >= 0.0)) throw config_error("drift: rw_sigma must be >= 0");
    if (!(pr_tau_s > 0.0)) throw config_error("drift: pr_tau must be > 0");
    if (!(coupling_sigma_rel >= 0.0)) throw config_error("drift: coupling_sigma must be >= 0");
    if (!(coupling_tau_s > 0.0)) throw config_error("drift: coupling_tau must be > 0");
  }
};

struct SimTrace {
  std::vector<double> time_s;
  std::vector<double> detuning_hz;
  std::vector<double> error;
  std::vector<double> control;
  std::vector<double> coupling;
  std::vector<std::uint8_t> locked;
};

struct LockSummary {
  double lock_fraction = 0.0;
  double rms_detuning_hz = 0.0;
  double hwhm_hz = 0.0;
  double final_detuning_hz = 0.0;
  int decimation = 1;
};

struct LockRun {
  SimTrace trace;
  LockSummary summary;
};

inline double lorentzian(double detuning_hz, double hwhm_hz) {
  const double u = detuning_hz / hwhm_hz;
  return 1.0 / (1.0 + u * u);
}

/// Static dither-lock error: first-harmonic demodulation of the Lorentzian
/// transmission probed with a small frequency dither. Odd in the detuning,
/// zero at resonance, unit slope there after normalization.
inline double error_signal(double detuning_hz, const DerivedCavity& cavity,
                           const LockLoopConfig& cfg) {
  cfg.validate();
  const double gamma = cavity.hwhm_hz;
  const double amp = cfg.mod_depth_rad * cfg.f_mod_hz;  // FM deviation of the phase dither
  constexpr int n = 256;
  double first_harmonic = 0.0;
  for (int i = 0; i < n; ++i) {
    const double phi = 2.0 * std::numbers::pi * (i + 0.5) / n;
    first_harmonic += lorentzian(detuning_hz + amp * std::sin(phi), gamma) * std::sin(phi);
  }
  first_harmonic *= 2.0 / n;
  return -std::cos(cfg.demod_phase_rad) * first_harmonic * gamma * gamma / (2.0 * amp);
}

namespace detail {

// Marks samples that belong to a contiguous below-threshold run of at least
// min_run samples.
inline std::vector<std::uint8_t> sustained_runs(const std::vector<double>& detuning,
                                                double threshold, std::size_t min_run) {
  std::vector<std::uint8_t> locked(detuning.size(), 0);
  std::size_t start = 0;
  bool in_run = false;
  auto flush = [&](std::size_t end) {
    if (in_run && end - start >= min_run) std::fill(locked.begin() + start, locked.begin() + end, 1);
    in_run = false;
  };
  for (std::size_t i = 0; i < detuning.size(); ++i) {
    if (std::abs(detuning[i]) < threshold) {
      if (!in_run) {
        start = i;
        in_run = true;
      }
    } else {
      flush(i);
    }
  }
  flush(detuning.size());
  return locked;
}

inline int trace_decimation(std::size_t n, std::size_t cap = 100000) {
  return static_cast<int>((n + cap - 1) / cap);
}

}  // namespace detail

/// Closed-loop cavity lock under drift and photorefractive feedback. The
/// resonance blueshift relaxes toward pr_gain * p * T(detuning) with time
/// constant pr_tau; the probe is dithered, the detector AC-coupled (one pole
/// at lpf_cutoff), demodulated against the reference, filtered by two
/// cascaded poles and PI-controlled. Lock criterion: |detuning| < hwhm/10
/// sustained for 50 ms.
/// Traces are decimated to at most 1e5 rows; statistics are computed at full
/// rate.
inline LockRun simulate_cavity_lock(const DerivedCavity& cavity, const LockLoopConfig& cfg,
                                    const DriftModel& drift, double p_pump_w) {
  cfg.validate();
  drift.validate();
  if (!(p_pump_w >= 0.0)) throw config_error("simulate_cavity_lock: pump must be >= 0");

  const double gamma = cavity.hwhm_hz;
  const double dt = 1.0 / cfg.sample_rate_hz;
  const std::size_t n = static_cast<std::size_t>(std::llround(cfg.duration_s * cfg.sample_rate_hz));
  const double amp = cfg.mod_depth_rad * cfg.f_mod_hz;
  const double lpf_a = 1.0 - std::exp(-2.0 * std::numbers::pi * cfg.lpf_cutoff_hz * dt);
  const double rw_step = drift.rw_sigma_hz * std::sqrt(dt);
  const double pr_target_gain = drift.pr_gain_hz_per_w * p_pump_w;
  const double integ_cap = (50.0 * gamma + 2.0 * pr_target_gain) / std::max(cfg.ki, 1e-12);

  Rng rng(cfg.seed);
  double base_drift = 0.0;   // random walk + ramp
  double coupling = 0.0;     // relative power fluctuation, OU
  double pr_shift = 0.0;     // blueshift of the resonance, Hz
  double control = 0.0;      // actuator output, Hz
  double dc_track = 1.0;     // detector DC estimate, pre-charged on resonance
  double lp1 = 0.0, lp2 = 0.0;  // demod low-pass states
  double integ = 0.0;
  double detuning = 0.0;

  std::vector<double> full_detuning(n);
  const int decim = detail::trace_decimation(n);
  SimTrace trace;
  const std::size_t n_out = (n + decim - 1) / decim;
  trace.time_s.reserve(n_out);
  trace.detuning_hz.reserve(n_out);
  trace.error.reserve(n_out);
  trace.control.reserve(n_out);
  trace.coupling.reserve(n_out);

  const double omega_mod = 2.0 * std::numbers::pi * cfg.f_mod_hz;
  double sum_sq = 0.0;
  const double ou_relax = dt / drift.coupling_tau_s;
  const double ou_step = drift.coupling_sigma_rel * std::sqrt(2.0 * dt / drift.coupling_tau_s);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = k * dt;
    coupling += -coupling * ou_relax + ou_step * rng.normal();
    const double buildup = lorentzian(detuning, gamma);
    pr_shift += (pr_target_gain * (1.0 + coupling) * buildup - pr_shift) * dt / drift.pr_tau_s;
    base_drift += drift.ramp_hz_per_s * dt + rw_step * rng.normal();
    detuning = base_drift - pr_shift + control;

    const double phase = omega_mod * t;
    const double transmission = lorentzian(detuning + amp * std::sin(phase), gamma);
    dc_track += lpf_a * (transmission - dc_track);
    const double demod = (transmission - dc_track) * 2.0 * std::sin(phase + cfg.demod_phase_rad);
    lp1 += lpf_a * (demod - lp1);
    lp2 += lpf_a * (lp1 - lp2);
    const double err = -lp2 * gamma * gamma / (2.0 * amp);

    integ = std::clamp(integ + err * dt, -integ_cap, integ_cap);
    control = -(cfg.kp * err + cfg.ki * integ);

    full_detuning[k] = detuning;
    sum_sq += detuning * detuning;
    if (k % decim == 0) {
      trace.time_s.push_back(t);
      trace.detuning_hz.push_back(detuning);
      trace.error.push_back(err);
      trace.control.push_back(control);
      trace.coupling.push_back(buildup);
    }
  }

  const std::size_t min_run =
      static_cast<std::size_t>(std::llround(0.050 * cfg.sample_rate_hz));
  const auto locked = detail::sustained_runs(full_detuning, gamma / 10.0, min_run);
  trace.locked.resize(trace.time_s.size());
  for (std::size_t i = 0, k = 0; k < n; k += decim, ++i) trace.locked[i] = locked[k];

  LockRun run;
  run.trace = std::move(trace);
  run.summary.hwhm_hz = gamma;
  run.summary.rms_detuning_hz = std::sqrt(sum_sq / static_cast<double>(n));
  run.summary.final_detuning_hz = full_detuning.back();
  run.summary.decimation = decim;
  std::size_t locked_count = 0;
  for (auto v : locked) locked_count += v;
  run.summary.lock_fraction = static_cast<double>(locked_count) / static_cast<double>(n);
  return run;
}

/// Lock fraction versus pump power, each power averaged over n_seeds
/// deterministic seeds derived from cfg.seed. max_threads > 1 distributes
/// runs; results are aggregated in fixed order either way.
inline std::vector<std::pair<double, double>> instability_scan(
    const DerivedCavity& cavity, const LockLoopConfig& cfg, const DriftModel& drift,
    const std::vector<double>& powers_w, int n_seeds = 8, int max_threads = 1) {
  if (!std::is_sorted(powers_w.begin(), powers_w.end()))
    throw config_error("instability_scan: powers must be sorted ascending");
  if (n_seeds < 1) throw config_error("instability_scan: need at least one seed");

  const std::size_t jobs = powers_w.size() * static_cast<std::size_t>(n_seeds);
  std::vector<double> fractions(jobs, 0.0);
  auto run_job = [&](std::size_t j) {
    const std::size_t pi = j / n_seeds;
    const std::size_t si = j % n_seeds;
    LockLoopConfig c = cfg;
    c.seed = derive_seed(cfg.seed, si);
    fractions[j] = simulate_cavity_lock(cavity, c, drift, powers_w[pi]).summary.lock_fraction;
  };

  const int workers = std::max(1, std::min<int>(max_threads, static_cast<int>(jobs)));
  if (workers == 1) {
    for (std::size_t j = 0; j < jobs; ++j) run_job(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t j = next.fetch_add(1); j < jobs; j = next.fetch_add(1)) run_job(j);
      });
    for (auto& th : pool) th.join();
  }

  std::vector<std::pair<double, double>> out;
  out.reserve(powers_w.size());
  for (std::size_t pi = 0; pi < powers_w.size(); ++pi) {
    double acc = 0.0;
    for (int si = 0; si < n_seeds; ++si) acc += fractions[pi * n_seeds + si];
    out.emplace_back(powers_w[pi], acc / n_seeds);
  }
  return out;
}

struct AlignmentSurface {
  double eta_max = 0.88;       // peak coupling
  double width = 1.0;          // Gaussian sigma, actuator units
  double center_drift = 0.25;  // optimum random walk per axis, units per sqrt(s)
  double meas_noise = 0.01;    // relative power-measurement noise

  void validate() const {
    if (!(eta_max > 0.0 && eta_max <= 1.0))
      throw config_error("alignment: eta_max must be in (0,1]");
    if (!(width > 0.0)) throw config_error("alignment: width must be > 0");
    if (!(center_drift >= 0.0 && meas_noise >= 0.0))
      throw config_error("alignment: noise terms must be >= 0");
  }
};

struct AlignmentConfig {
  double step = 0.06;        // move length per tick, actuator units
  double dither = 0.06;      // probe offset per axis
  double cadence_hz = 100.0;
  double duration_s = 20.0;
  double bound = 8.0;        // actuator range, +-bound per axis
  double start_offset = 2.0; // initial |pos - center| in units of width
  std::uint64_t seed = 1;
  bool optimizer_on = true;

  void validate() const {
    if (!(step > 0.0 && dither > 0.0)) throw config_error("alignment: step and dither must be > 0");
    if (!(cadence_hz > 0.0 && duration_s > 0.0))
      throw config_error("alignment: cadence and duration must be > 0");
    if (!(bound > dither)) throw config_error("alignment: bound must exceed dither");
  }
};

struct AlignSummary {
  double final_coupling = 0.0;
  double mean_coupling = 0.0;
  double eta_max = 0.0;
  std::size_t ticks = 0;
  std::size_t ticks_to_99pct = 0;  // first tick at >= 0.99 * eta_max; 0 if never
  std::array<double, 2> min_probe{0.0, 0.0};
  std::array<double, 2> max_probe{0.0, 0.0};
};

struct AlignRun {
  SimTrace trace;
  AlignSummary summary;
};

/// Gradient-descent auto-alignment on a drifting 2-axis Gaussian coupling
/// surface. Each tick probes +-dither on both axes through the 1 % tap and
/// moves by step along the normalized measured gradient; probes and moves
/// stay inside the actuator bounds.
inline AlignRun simulate_alignment(const AlignmentSurface& surface, const AlignmentConfig& cfg) {
  surface.validate();
  cfg.validate();

  Rng rng(cfg.seed);
  const std::size_t ticks =
      static_cast<std::size_t>(std::llround(cfg.duration_s * cfg.cadence_hz));
  const double tick_dt = 1.0 / cfg.cadence_hz;
  const double drift_step = surface.center_drift * std::sqrt(tick_dt);

  std::array<double, 2> center{0.0, 0.0};
  const double diag = cfg.start_offset * surface.width / std::numbers::sqrt2;
  std::array<double, 2> pos{diag, diag};

  auto coupling_at = [&](const std::array<double, 2>& q) {
    const double dx = q[0] - center[0], dy = q[1] - center[1];
    return surface.eta_max * std::exp(-(dx * dx + dy * dy) / (2.0 * surface.width * surface.width));
  };

  AlignRun run;
  run.summary.eta_max = surface.eta_max;
  run.summary.min_probe = pos;
  run.summary.max_probe = pos;
  const double move_cap = cfg.bound - cfg.dither;

  auto tap_measure = [&](const std::array<double, 2>& q) {
    run.summary.min_probe[0] = std::min(run.summary.min_probe[0], q[0]);
    run.summary.min_probe[1] = std::min(run.summary.min_probe[1], q[1]);
    run.summary.max_probe[0] = std::max(run.summary.max_probe[0], q[0]);
    run.summary.max_probe[1] = std::max(run.summary.max_probe[1], q[1]);
    return 0.01 * coupling_at(q) * (1.0 + surface.meas_noise * rng.normal());
  };

  double coupling_sum = 0.0;
  for (std::size_t k = 0; k < ticks; ++k) {
    center[0] += drift_step * rng.normal();
    center[1] += drift_step * rng.normal();

    double move_len = 0.0;
    if (cfg.optimizer_on) {
      std::array<double, 2> grad{0.0, 0.0};
      for (int axis = 0; axis < 2; ++axis) {
        auto plus = pos, minus = pos;
        plus[axis] += cfg.dither;
        minus[axis] -= cfg.dither;
        grad[axis] = (tap_measure(plus) - tap_measure(minus)) / (2.0 * cfg.dither);
      }
      const double norm = std::hypot(grad[0], grad[1]);
      if (norm > 1e-30) {
        pos[0] = std::clamp(pos[0] + cfg.step * grad[0] / norm, -move_cap, move_cap);
        pos[1] = std::clamp(pos[1] + cfg.step * grad[1] / norm, -move_cap, move_cap);
        move_len = cfg.step;
      }
    }

    const double eta = coupling_at(pos);
    coupling_sum += eta;
    if (run.summary.ticks_to_99pct == 0 && eta >= 0.99 * surface.eta_max)
      run.summary.ticks_to_99pct = k + 1;

    run.trace.time_s.push_back(k * tick_dt);
    run.trace.detuning_hz.push_back(0.0);
    run.trace.error.push_back(
        std::hypot(pos[0] - center[0], pos[1] - center[1]));  // offset from optimum
    run.trace.control.push_back(move_len);
    run.trace.coupling.push_back(eta);
    run.trace.locked.push_back(eta >= 0.95 * surface.eta_max ? 1 : 0);
  }

  run.summary.ticks = ticks;
  run.summary.final_coupling = run.trace.coupling.empty() ? 0.0 : run.trace.coupling.back();
  run.summary.mean_coupling = ticks ? coupling_sum / static_cast<double>(ticks) : 0.0;
  return run;
}

}  // namespace sqzlab
