#include <catch2/catch_amalgamated.hpp>
#include <algorithm>
#include <cmath>
#include <cstring>

#include "sqzlab/cavity.hpp"
#include "sqzlab/locksim.hpp"
#include "sqzlab/rng.hpp"

using namespace sqzlab;
using Catch::Approx;

namespace {

const DerivedCavity cav = derive_cavity(CavityGeometry{});

DriftModel no_drift() {
  DriftModel d;
  d.rw_sigma_hz = 0.0;
  d.ramp_hz_per_s = 0.0;
  d.pr_gain_hz_per_w = 0.0;
  d.coupling_sigma_rel = 0.0;
  return d;
}

}  // namespace

TEST_CASE("dither error signal statics") {
  const LockLoopConfig cfg;
  const double g = cav.hwhm_hz;

  SECTION("zero-crossing at resonance") {
    CHECK(std::abs(error_signal(0.0, cav, cfg)) < 1.0);  // Hz, vs hwhm of 2.4e8
  }
  SECTION("odd in the detuning") {
    Rng rng(4);
    for (int i = 0; i < 50; ++i) {
      const double d = (rng.uniform() - 0.5) * 6.0 * g;
      CHECK(error_signal(-d, cav, cfg) == Approx(-error_signal(d, cav, cfg)).margin(1e-3 * g));
    }
  }
  SECTION("extrema at hwhm/sqrt(3)") {
    double best_d = 0.0, best_e = 0.0;
    for (double d = 0.0; d < 2.0 * g; d += g / 4000.0) {
      const double e = error_signal(d, cav, cfg);
      if (e > best_e) {
        best_e = e;
        best_d = d;
      }
    }
    CHECK(best_d == Approx(g / std::sqrt(3.0)).epsilon(0.02));
  }
  SECTION("linear within 5 % for small detunings") {
    for (double frac : {0.01, 0.03, 0.05, 0.08, 0.0999}) {
      const double d = frac * g;
      CHECK(error_signal(d, cav, cfg) / d == Approx(1.0).margin(0.05));
    }
  }
}

TEST_CASE("quiet loop stays locked with constant control") {
  LockLoopConfig cfg;
  cfg.duration_s = 0.5;
  const auto run = simulate_cavity_lock(cav, cfg, no_drift(), 0.0);
  CHECK(run.summary.lock_fraction == Approx(1.0));
  CHECK(run.summary.rms_detuning_hz < 10.0);
  for (double c : run.trace.control) CHECK(std::abs(c) < 10.0);
  CHECK(std::all_of(run.trace.locked.begin(), run.trace.locked.end(),
                    [](auto v) { return v == 1; }));
}

TEST_CASE("low pump power holds the lock tightly") {
  const LockLoopConfig cfg;
  const DriftModel drift;
  const auto run = simulate_cavity_lock(cav, cfg, drift, 0.005);
  CHECK(run.summary.lock_fraction > 0.95);
  CHECK(run.summary.rms_detuning_hz < 0.05 * cav.hwhm_hz);
}

TEST_CASE("high pump power breaks the lock") {
  const LockLoopConfig cfg;
  const DriftModel drift;
  const auto run = simulate_cavity_lock(cav, cfg, drift, 0.040);
  CHECK(run.summary.lock_fraction < 0.5);
  CHECK(std::any_of(run.trace.locked.begin(), run.trace.locked.end(),
                    [](auto v) { return v == 0; }));
}

TEST_CASE("identical seeds give bit-identical traces") {
  LockLoopConfig cfg;
  cfg.duration_s = 0.3;
  cfg.seed = 77;
  const DriftModel drift;
  const auto a = simulate_cavity_lock(cav, cfg, drift, 0.020);
  const auto b = simulate_cavity_lock(cav, cfg, drift, 0.020);
  REQUIRE(a.trace.detuning_hz.size() == b.trace.detuning_hz.size());
  CHECK(std::memcmp(a.trace.detuning_hz.data(), b.trace.detuning_hz.data(),
                    a.trace.detuning_hz.size() * sizeof(double)) == 0);
  CHECK(std::memcmp(a.trace.error.data(), b.trace.error.data(),
                    a.trace.error.size() * sizeof(double)) == 0);
  CHECK(std::memcmp(a.trace.control.data(), b.trace.control.data(),
                    a.trace.control.size() * sizeof(double)) == 0);
  CHECK(a.trace.locked == b.trace.locked);
}

TEST_CASE("ramp-following error scales inversely with integrator gain") {
  DriftModel d = no_drift();
  d.ramp_hz_per_s = 2e8;
  auto tail_error = [&](double ki) {
    LockLoopConfig cfg;
    cfg.ki = ki;
    cfg.duration_s = 1.0;
    const auto run = simulate_cavity_lock(cav, cfg, d, 0.0);
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t i = run.trace.detuning_hz.size() * 3 / 4;
         i < run.trace.detuning_hz.size(); ++i, ++n)
      acc += run.trace.detuning_hz[i];
    return acc / static_cast<double>(n);
  };
  const double e300 = tail_error(300.0);
  const double e600 = tail_error(600.0);
  CHECK(e300 == Approx(2e8 / 300.0).epsilon(0.05));
  CHECK(e600 == Approx(0.5 * e300).epsilon(0.10));
}

TEST_CASE("instability scan") {
  const LockLoopConfig cfg;
  const DriftModel drift;

  SECTION("no photorefraction means no power dependence") {
    DriftModel calm = drift;
    calm.pr_gain_hz_per_w = 0.0;
    const auto scan =
        instability_scan(cav, cfg, calm, {0.005, 0.020, 0.040}, 4, 2);
    for (const auto& [p, f] : scan) {
      (void)p;
      CHECK(f > 0.9);
    }
  }

  SECTION("calibrated scenario loses lock between 20 and 35 mW") {
    const std::vector<double> powers{0.005, 0.010, 0.015, 0.020,
                                     0.025, 0.030, 0.035, 0.040};
    const auto scan = instability_scan(cav, cfg, drift, powers, 8, 4);
    // non-increasing within Monte-Carlo tolerance
    for (std::size_t i = 1; i < scan.size(); ++i)
      CHECK(scan[i].second <= scan[i - 1].second + 0.1);
    // 0.5 crossing inside the observed failure window
    double cross = 0.0;
    for (std::size_t i = 1; i < scan.size(); ++i)
      if (scan[i - 1].second >= 0.5 && scan[i].second < 0.5) {
        cross = 0.5 * (scan[i - 1].first + scan[i].first);
        break;
      }
    INFO("crossing near " << cross * 1e3 << " mW");
    CHECK(cross > 0.020);
    CHECK(cross < 0.035);
    CHECK(scan.front().second > 0.9);
    CHECK(scan.back().second < 0.1);
  }

  SECTION("single power reproduces the per-seed aggregation") {
    const auto scan = instability_scan(cav, cfg, drift, {0.020}, 4, 1);
    double acc = 0.0;
    for (int s = 0; s < 4; ++s) {
      LockLoopConfig c = cfg;
      c.seed = derive_seed(cfg.seed, s);
      acc += simulate_cavity_lock(cav, c, drift, 0.020).summary.lock_fraction;
    }
    CHECK(scan[0].second == Approx(acc / 4.0));
  }

  SECTION("threaded and serial scans agree exactly") {
    const std::vector<double> powers{0.010, 0.030};
    const auto serial = instability_scan(cav, cfg, drift, powers, 4, 1);
    const auto threaded = instability_scan(cav, cfg, drift, powers, 4, 8);
    for (std::size_t i = 0; i < serial.size(); ++i)
      CHECK(serial[i].second == threaded[i].second);
  }

  SECTION("unsorted powers are rejected") {
    CHECK_THROWS_AS(instability_scan(cav, cfg, drift, {0.030, 0.010}, 2, 1),
                    config_error);
  }
}

TEST_CASE("gradient-descent alignment") {
  SECTION("static surface converges from a two-width offset") {
    AlignmentSurface surf;
    surf.center_drift = 0.0;
    surf.meas_noise = 0.0;
    const AlignmentConfig cfg;
    const auto run = simulate_alignment(surf, cfg);
    REQUIRE(run.summary.ticks_to_99pct > 0);
    CHECK(run.summary.ticks_to_99pct <= 200);
    CHECK(run.summary.final_coupling >= 0.98 * surf.eta_max);
    // monotone climb until the peak plateau
    for (std::size_t i = 1; i < run.summary.ticks_to_99pct; ++i)
      CHECK(run.trace.coupling[i] >= run.trace.coupling[i - 1] - 1e-12);
  }

  SECTION("starting at the optimum stays put") {
    AlignmentSurface surf;
    surf.center_drift = 0.0;
    surf.meas_noise = 0.0;
    AlignmentConfig cfg;
    cfg.start_offset = 0.0;
    const auto run = simulate_alignment(surf, cfg);
    CHECK(run.trace.error.back() == Approx(0.0).margin(1e-12));
    CHECK(run.summary.final_coupling == Approx(surf.eta_max));
  }

  SECTION("tracks a drifting optimum that an open-loop system loses") {
    const AlignmentSurface surf;
    const AlignmentConfig cfg;
    const auto tracked = simulate_alignment(surf, cfg);
    AlignmentConfig off = cfg;
    off.optimizer_on = false;
    const auto open_loop = simulate_alignment(surf, off);
    CHECK(tracked.summary.mean_coupling >= 0.95 * surf.eta_max);
    CHECK(open_loop.summary.mean_coupling < 0.5 * surf.eta_max);
  }

  SECTION("probes stay inside the actuator bounds") {
    const AlignmentSurface surf;
    AlignmentConfig cfg;
    cfg.bound = 2.5;
    const auto run = simulate_alignment(surf, cfg);
    for (int axis : {0, 1}) {
      CHECK(run.summary.min_probe[axis] >= -cfg.bound);
      CHECK(run.summary.max_probe[axis] <= cfg.bound);
    }
  }

  SECTION("identical seeds give bit-identical traces") {
    const AlignmentSurface surf;
    const AlignmentConfig cfg;
    const auto a = simulate_alignment(surf, cfg);
    const auto b = simulate_alignment(surf, cfg);
    CHECK(a.trace.coupling == b.trace.coupling);
    CHECK(a.trace.error == b.trace.error);
  }
}
