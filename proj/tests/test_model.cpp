#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "sqzlab/cavity.hpp"
#include "sqzlab/decibel.hpp"
#include "sqzlab/photorefraction.hpp"
#include "sqzlab/rng.hpp"
#include "sqzlab/squeezing.hpp"

using namespace sqzlab;
using Catch::Approx;

namespace {

// Gaussian average of cos^2 by composite Simpson over +-8 sigma, the
// independent cross-check for the closed-form phase-noise mixing.
double cos2_gaussian_quadrature(double sigma) {
  const int n = 20000;  // even
  const double lo = -8.0 * sigma, hi = 8.0 * sigma;
  const double h = (hi - lo) / n;
  auto f = [&](double t) {
    const double c = std::cos(t);
    return c * c * std::exp(-t * t / (2.0 * sigma * sigma));
  };
  double acc = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) acc += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

}  // namespace

TEST_CASE("derived cavity quantities at the device geometry") {
  const CavityGeometry geo;
  const auto cav = derive_cavity(geo);
  CHECK(cav.fsr_hz == Approx(5.8369e9).epsilon(1e-3));
  CHECK(cav.fwhm_hz == Approx(476.6e6).epsilon(5e-3));
  CHECK(cav.hwhm_hz == Approx(cav.fwhm_hz / 2.0));
  CHECK(cav.fwhm_hz == Approx(cav.fsr_hz / cav.finesse));
  CHECK(cav.escape_eta == Approx(0.8723).margin(5e-4));
  CHECK(cav.escape_eta > 0.85);
  CHECK(cav.escape_eta < 0.89);
}

TEST_CASE("escape efficiency of the low-loss variant") {
  CavityGeometry geo;
  geo.alpha_db_per_m = 2.0;
  CHECK(derive_cavity(geo).escape_eta == Approx(0.9549).margin(5e-4));
}

TEST_CASE("lossless cavity escapes entirely through the output coupler") {
  CavityGeometry geo;
  geo.alpha_db_per_m = 0.0;
  geo.r_hr = 1.0;
  CHECK(derive_cavity(geo).escape_eta == Approx(1.0));
}

TEST_CASE("cavity without net decay is rejected") {
  CavityGeometry geo;
  geo.alpha_db_per_m = 0.0;
  geo.r_hr = 1.0;
  geo.r_pr = 1.0;
  CHECK_THROWS_AS(derive_cavity(geo), invalid_geometry_error);
  geo.r_pr = 0.64;
  geo.length_m = -1.0;
  CHECK_THROWS_AS(derive_cavity(geo), invalid_geometry_error);
}

TEST_CASE("escape efficiency limit at vanishing propagation loss") {
  CavityGeometry geo;
  geo.alpha_db_per_m = 1e-12;
  const double expected = std::log(geo.r_pr) / (std::log(geo.r_pr) + std::log(geo.r_hr));
  CHECK(derive_cavity(geo).escape_eta == Approx(expected).epsilon(1e-9));
}

TEST_CASE("finesse grows with either reflectivity") {
  CavityGeometry geo;
  Rng rng(42);
  for (int i = 0; i < 50; ++i) {
    geo.r_pr = 0.3 + 0.6 * rng.uniform();
    geo.r_hr = geo.r_pr + (0.999 - geo.r_pr) * rng.uniform();
    const double f0 = derive_cavity(geo).finesse;
    CavityGeometry up_pr = geo;
    up_pr.r_pr = geo.r_pr + 0.8 * (geo.r_hr - geo.r_pr) + 1e-6;
    CHECK(derive_cavity(up_pr).finesse > f0);
    CavityGeometry up_hr = geo;
    up_hr.r_hr = geo.r_hr + 0.5 * (0.9999 - geo.r_hr);
    CHECK(derive_cavity(up_hr).finesse > f0);
  }
}

TEST_CASE("classical gain closed forms") {
  CHECK(classical_gain(0.0, 0.060, GainBranch::amplify) == Approx(1.0));
  CHECK(classical_gain(0.0, 0.060, GainBranch::deamplify) == Approx(1.0));
  CHECK(classical_gain(0.015, 0.060, GainBranch::amplify) == Approx(4.0));
  CHECK(classical_gain(0.015, 0.060, GainBranch::deamplify) == Approx(4.0 / 9.0));
  CHECK_THROWS_AS(classical_gain(0.060, 0.060, GainBranch::amplify), above_threshold_error);
  CHECK_NOTHROW(classical_gain(0.120, 0.060, GainBranch::deamplify));
}

TEST_CASE("quadrature variance limits") {
  SqueezingModelParams params;
  CHECK(quadrature_variance(params, 0.0, 5e6, Quadrature::squeezed).value == Approx(1.0));
  CHECK(quadrature_variance(params, 0.0, 5e6, Quadrature::antisqueezed).value == Approx(1.0));
  // ideal limit: unit efficiency at threshold, zero sideband
  CHECK(variance_from_pump_ratio(1.0, 1.0 - 1e-12, 0.0, Quadrature::squeezed).value ==
        Approx(0.0).margin(1e-9));
  CHECK_THROWS_AS(quadrature_variance(params, 0.070, 5e6, Quadrature::squeezed),
                  above_threshold_error);
}

TEST_CASE("variance pair reproducing the measured squeezing levels") {
  const auto va = variance_from_pump_ratio(0.5954, 0.4699, 0.0, Quadrature::antisqueezed);
  const auto vs = variance_from_pump_ratio(0.5954, 0.4699, 0.0, Quadrature::squeezed);
  CHECK(va.value == Approx(4.98).margin(0.005));
  CHECK(vs.value == Approx(0.482).margin(0.0005));
  CHECK(db_from_linear(va.value) == Approx(6.97).margin(0.01));
  CHECK(db_from_linear(vs.value) == Approx(-3.17).margin(0.01));
}

TEST_CASE("variance pair inversion recovers eta and pump ratio") {
  const auto inv = invert_variance_pair({linear_from_db(6.97)}, {linear_from_db(-3.17)});
  CHECK(inv.eta_total == Approx(0.5956).margin(5e-4));
  CHECK(inv.pump_ratio == Approx(0.4696).margin(5e-4));
  CHECK(inv.eta_total > 0.55);
  CHECK(inv.eta_total < 0.64);
  CHECK(inv.pump_ratio > 0.45);
  CHECK(inv.pump_ratio < 0.49);
}

TEST_CASE("inversion round trip is exact") {
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const double eta = 0.05 + 0.9 * rng.uniform();
    const double x = 0.05 + 0.9 * rng.uniform();
    const auto va = variance_from_pump_ratio(eta, x, 0.0, Quadrature::antisqueezed);
    const auto vs = variance_from_pump_ratio(eta, x, 0.0, Quadrature::squeezed);
    const auto inv = invert_variance_pair(va, vs);
    CHECK(inv.eta_total == Approx(eta).epsilon(1e-9));
    CHECK(inv.pump_ratio == Approx(x).epsilon(1e-9));
  }
}

TEST_CASE("uncertainty product and ordering") {
  Rng rng(12);
  for (int i = 0; i < 300; ++i) {
    const double eta = rng.uniform() * 0.999;
    const double x = rng.uniform() * 0.98;
    const double fr = 3.0 * rng.uniform();
    const auto vs = variance_from_pump_ratio(eta, x, fr, Quadrature::squeezed);
    const auto va = variance_from_pump_ratio(eta, x, fr, Quadrature::antisqueezed);
    CHECK(vs.value <= 1.0 + 1e-12);
    CHECK(va.value >= 1.0 - 1e-12);
    CHECK(vs.value * va.value >= 1.0 - 1e-9);
  }
  // purity at unit efficiency, any sideband
  for (int i = 0; i < 50; ++i) {
    const double x = rng.uniform() * 0.98;
    const double fr = 3.0 * rng.uniform();
    const auto vs = variance_from_pump_ratio(1.0, x, fr, Quadrature::squeezed);
    const auto va = variance_from_pump_ratio(1.0, x, fr, Quadrature::antisqueezed);
    CHECK(vs.value * va.value == Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("variance approaches vacuum monotonically with sideband frequency") {
  SqueezingModelParams params;
  double prev_s = 0.0, prev_a = 10.0;
  bool first = true;
  for (double f = 0.0; f <= 1e9; f += 50e6) {
    const double s = quadrature_variance(params, 0.030, f, Quadrature::squeezed).value;
    const double a = quadrature_variance(params, 0.030, f, Quadrature::antisqueezed).value;
    if (!first) {
      CHECK(s > prev_s);
      CHECK(a < prev_a);
    }
    prev_s = s;
    prev_a = a;
    first = false;
  }
}

TEST_CASE("phase noise mixing") {
  SECTION("zero jitter is the identity") {
    const auto [s, a] = apply_phase_noise({0.5}, {3.0}, 0.0);
    CHECK(s.value == Approx(0.5));
    CHECK(a.value == Approx(3.0));
  }
  SECTION("large jitter fully mixes the quadratures") {
    const auto [s, a] = apply_phase_noise({0.5}, {3.0}, 50.0);
    CHECK(s.value == Approx(1.75).epsilon(1e-9));
    CHECK(a.value == Approx(1.75).epsilon(1e-9));
  }
  SECTION("reference point") {
    const auto [s, a] = apply_phase_noise({0.465}, {14.56}, 0.020);
    CHECK(s.value == Approx(0.470636).margin(2e-6));
    (void)a;
  }
  SECTION("sum of the pair is preserved") {
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
      const double vs = rng.uniform(), va = 1.0 + 20.0 * rng.uniform();
      const double sig = 0.3 * rng.uniform();
      const auto [s, a] = apply_phase_noise({vs}, {va}, sig);
      CHECK(s.value + a.value == Approx(vs + va).epsilon(1e-12));
    }
  }
  SECTION("closed form matches Gaussian quadrature to 1e-9") {
    for (double sigma : {1e-3, 5e-3, 0.020, 0.1, 0.5, 1.2}) {
      const double c2 = 0.5 * (1.0 + std::exp(-2.0 * sigma * sigma));
      CHECK(c2 == Approx(cos2_gaussian_quadrature(sigma)).margin(1e-9));
      const auto [s, a] = apply_phase_noise({0.465}, {14.56}, sigma);
      const double oracle = 0.465 * cos2_gaussian_quadrature(sigma) +
                            14.56 * (1.0 - cos2_gaussian_quadrature(sigma));
      CHECK(s.value == Approx(oracle).margin(1e-8));
      (void)a;
    }
  }
}

TEST_CASE("loss channel") {
  CHECK(apply_loss({0.4}, 1.0).value == Approx(0.4));
  CHECK(apply_loss({0.4}, 0.0).value == Approx(1.0));
  CHECK(apply_loss({linear_from_db(-2.0)}, 0.295).value == Approx(0.891).margin(5e-4));
  CHECK(db_from_linear(apply_loss({linear_from_db(-2.0)}, 0.295).value) ==
        Approx(-0.5).margin(0.005));

  SECTION("composition multiplies the efficiencies") {
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
      const double v = 0.2 + 5.0 * rng.uniform();
      const double a = rng.uniform(), b = rng.uniform();
      const double two_step = apply_loss(apply_loss({v}, a), b).value;
      CHECK(two_step == Approx(apply_loss({v}, a * b).value).margin(1e-12));
    }
  }
}

TEST_CASE("efficiency chain") {
  EfficiencyChain chain{{{"propagation", 0.80}, {"visibility_sq", 0.99 * 0.99},
                         {"detector", 0.934}}};
  const double detection = chain_total(chain);
  CHECK(detection == Approx(0.7323).margin(5e-4));
  CHECK(0.87 * detection == Approx(0.637).margin(1e-3));
  CHECK(0.87 * detection > 0.62 - 0.04);
  CHECK(0.87 * detection < 0.62 + 0.04);
  CHECK(chain_total({}) == Approx(1.0));
  EfficiencyChain bad{{{"broken", 1.2}}};
  CHECK_THROWS_AS(chain_total(bad), std::domain_error);
}

TEST_CASE("solving a single unknown chain entry") {
  const double missing = chain_solve_missing(
      {{"visibility_sq", 0.94 * 0.94}, {"fiber", std::nullopt}}, 0.295);
  CHECK(missing == Approx(0.334).margin(1e-3));
  CHECK_THROWS_AS(chain_solve_missing({{"a", std::nullopt}, {"b", std::nullopt}}, 0.5),
                  under_determined_error);
  CHECK_THROWS_AS(chain_solve_missing({{"a", 0.9}}, 0.5), under_determined_error);
}

TEST_CASE("asymptotic squeezing bound") {
  CHECK(asymptotic_squeezing_db(0.0) == Approx(0.0));
  CHECK(asymptotic_squeezing_db(0.637) == Approx(-4.40).margin(0.01));
  CHECK(asymptotic_squeezing_db(0.700) == Approx(-5.23).margin(0.01));
  CHECK_THROWS_AS(asymptotic_squeezing_db(1.0), std::domain_error);
}

TEST_CASE("decibel conversions") {
  CHECK(db_from_linear(1.0) == Approx(0.0));
  CHECK(db_from_linear(0.482) == Approx(-3.17).margin(0.005));
  CHECK(db_from_linear(4.98) == Approx(6.97).margin(0.005));
  CHECK_THROWS_AS(db_from_linear(0.0), std::domain_error);
  CHECK_THROWS_AS(db_from_linear(-1.0), std::domain_error);
  Rng rng(9);
  for (int i = 0; i < 200; ++i) {
    const double v = std::exp(10.0 * (rng.uniform() - 0.5));
    CHECK(linear_from_db(db_from_linear(v)) == Approx(v).epsilon(1e-12));
  }
}

TEST_CASE("photorefractive index shift") {
  PhotorefractionModel model;
  CHECK(index_shift(model, 0.0) == Approx(0.0));
  CHECK(index_shift(model, 0.030) == Approx(-1.191e-4).epsilon(1e-6));
  PhotorefractionModel warm{-3.97e-3, 5.0e-3};
  CHECK(index_shift(warm, 0.001) > 0.0);  // thermo-optic redshift regime
}

TEST_CASE("resonance blueshift") {
  PhotorefractionModel model;
  CavityGeometry geo;
  CHECK(resonance_shift_hz(model, geo, 0.0) == Approx(0.0));
  const double shift = resonance_shift_hz(model, geo, 0.030);
  CHECK(shift == Approx(1.0764e10).epsilon(1e-3));
  CHECK(shift > 0.0);

  SECTION("linear in power, sign opposite to the index change") {
    Rng rng(21);
    for (int i = 0; i < 50; ++i) {
      const double p = 0.050 * rng.uniform();
      CHECK(resonance_shift_hz(model, geo, p) ==
            Approx(p / 0.030 * shift).margin(std::abs(shift) * 1e-12));
      const double dn = index_shift(model, p);
      if (dn != 0.0) CHECK(resonance_shift_hz(model, geo, p) * dn < 0.0);
    }
  }
}

TEST_CASE("phase matching efficiency") {
  PhaseMatching pm;
  pm.kappa_t_rad_per_m_c = 50.0;
  pm.slope_s_c_per_w = 60.0;
  pm.length_m = 0.012;

  CHECK(pm_efficiency(pm, pm.t_pm0_c + pm.slope_s_c_per_w * 0.025, 0.025) == Approx(1.0));

  // first sinc null and the half-pi point
  const double dk_per_c = pm.kappa_t_rad_per_m_c * pm.length_m / 2.0;
  const double t_null = pm.t_pm0_c + std::numbers::pi / dk_per_c;
  CHECK(pm_efficiency(pm, t_null, 0.0) == Approx(0.0).margin(1e-30));
  const double t_half = pm.t_pm0_c + std::numbers::pi / (2.0 * dk_per_c);
  CHECK(pm_efficiency(pm, t_half, 0.0) == Approx(4.0 / (std::numbers::pi * std::numbers::pi)));

  SECTION("never exceeds one; unity only at the corrected matching point") {
    Rng rng(31);
    for (int i = 0; i < 200; ++i) {
      const double t = 120.0 + 40.0 * rng.uniform();
      const double p = 0.050 * rng.uniform();
      const double eff = pm_efficiency(pm, t, p);
      CHECK(eff <= 1.0);
      if (std::abs(t - (pm.t_pm0_c + pm.slope_s_c_per_w * p)) > 1e-3) CHECK(eff < 1.0);
    }
  }

  SECTION("power sweep peaks where the shift compensates the offset") {
    const double t_fixed = pm.t_pm0_c + 1.2;
    double best_p = 0.0, best_eff = -1.0;
    for (double p = 0.0; p <= 0.060; p += 1e-4) {
      const double eff = pm_efficiency(pm, t_fixed, p);
      if (eff > best_eff) {
        best_eff = eff;
        best_p = p;
      }
    }
    CHECK(best_p == Approx(1.2 / pm.slope_s_c_per_w).margin(2e-4));
  }
}

TEST_CASE("effective pump ratio under mismatch") {
  CHECK(effective_pump_ratio(0.5, 1.0) == Approx(0.5));
  CHECK(effective_pump_ratio(0.5, 0.0) == Approx(0.0));
  CHECK(effective_pump_ratio(0.707, 0.405) == Approx(0.450).margin(5e-4));
  // corrected gain equals uncorrected gain at unit efficiency
  const double x = effective_pump_ratio(std::sqrt(0.25), 1.0);
  CHECK(1.0 / ((1.0 - x) * (1.0 - x)) == Approx(classical_gain(0.015, 0.060, GainBranch::amplify)));
}
