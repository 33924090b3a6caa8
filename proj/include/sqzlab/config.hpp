#pragma once

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "sqzlab/cavity.hpp"
#include "sqzlab/errors.hpp"
#include "sqzlab/locksim.hpp"
#include "sqzlab/photorefraction.hpp"
#include "sqzlab/sensing.hpp"
#include "sqzlab/squeezing.hpp"

namespace sqzlab {

using json = nlohmann::ordered_json;

// Single JSON configuration document with a versioned schema. Unknown keys
// are rejected; keys starting with '$' are annotations and are ignored.

struct FitConfig {
  double f_sideband_hz = 5e6;
  double hwhm_hz = 100e6;
  double p_over_pth = 0.5;
  double sigma_db_default = 0.09;
  double sigma_rel_gain_default = 0.02;
};

struct InstabilityConfig {
  std::vector<double> powers_w{0.002, 0.005, 0.010, 0.015, 0.020,
                               0.025, 0.030, 0.035, 0.040};
  int n_seeds = 8;
};

struct MziRunConfig {
  MziConfig mzi;
  double source_sq_db = -2.0;  // squeezing at the resonator output for the sensing run
  double rbw_hz = 20e3;
  double target_snr_db = 8.26;  // vacuum-run calibration target
};

struct BudgetConfig {
  double projection_alpha_db_per_m = 2.0;
};

struct RunConfig {
  int version = 1;
  std::uint64_t seed = 1;
  CavityGeometry cavity;
  SqueezingModelParams squeezing;
  EfficiencyChain chain{{{"propagation", 0.80},
                         {"visibility_sq", 0.9801},
                         {"detector", 0.934}}};
  PhotorefractionModel photorefraction;
  PhaseMatching phase_matching;
  FitConfig fit;
  LockLoopConfig lock;
  DriftModel drift;
  AlignmentSurface alignment_surface;
  AlignmentConfig alignment;
  InstabilityConfig instability;
  MziRunConfig sensing;
  BudgetConfig budget;
};

namespace detail {

inline json config_to_json(const RunConfig& c) {
  json j;
  j["$comment"] =
      "sqzlab run configuration; all values shown are the built-in defaults. "
      "Keys starting with '$' are ignored.";
  j["version"] = c.version;
  j["seed"] = c.seed;
  j["cavity"] = {
      {"$comment", "waveguide resonator; lengths in m, loss in dB/m, power reflectivities"},
      {"length_m", c.cavity.length_m},
      {"n_eff", c.cavity.n_eff},
      {"alpha_db_per_m", c.cavity.alpha_db_per_m},
      {"r_hr", c.cavity.r_hr},
      {"r_pr", c.cavity.r_pr}};
  j["squeezing"] = {
      {"$comment", "variance-model parameters: total efficiency, threshold, half-linewidth, "
                   "phase-noise std"},
      {"eta_total", c.squeezing.eta_total},
      {"p_threshold_w", c.squeezing.p_threshold_w},
      {"hwhm_hz", c.squeezing.hwhm_hz},
      {"phase_noise_rad", c.squeezing.phase_noise_rad}};
  j["chain"] = json::array();
  for (const auto& e : c.chain.entries) j["chain"].push_back({{"name", e.name}, {"eta", e.eta}});
  j["photorefraction"] = {{"$comment", "index change per watt; c_pr negative = blueshift"},
                          {"c_pr_per_w", c.photorefraction.c_pr_per_w},
                          {"thermo_c_per_w", c.photorefraction.thermo_c_per_w}};
  j["phase_matching"] = {{"$comment", "sinc^2 quasi-phase-matching; slopes default to disabled"},
                         {"t_pm0_c", c.phase_matching.t_pm0_c},
                         {"kappa_t_rad_per_m_c", c.phase_matching.kappa_t_rad_per_m_c},
                         {"slope_s_c_per_w", c.phase_matching.slope_s_c_per_w},
                         {"length_m", c.phase_matching.length_m}};
  j["fit"] = {{"$comment", "adapter settings: sideband and half-linewidth for pump sweeps, "
                           "pump ratio for spectra, default sigmas"},
              {"f_sideband_hz", c.fit.f_sideband_hz},
              {"hwhm_hz", c.fit.hwhm_hz},
              {"p_over_pth", c.fit.p_over_pth},
              {"sigma_db_default", c.fit.sigma_db_default},
              {"sigma_rel_gain_default", c.fit.sigma_rel_gain_default}};
  j["lock"] = {{"$comment", "dither lock loop; ki in 1/s acting on the Hz-normalized error"},
               {"f_mod_hz", c.lock.f_mod_hz},
               {"mod_depth_rad", c.lock.mod_depth_rad},
               {"demod_phase_rad", c.lock.demod_phase_rad},
               {"lpf_cutoff_hz", c.lock.lpf_cutoff_hz},
               {"kp", c.lock.kp},
               {"ki", c.lock.ki},
               {"sample_rate_hz", c.lock.sample_rate_hz},
               {"duration_s", c.lock.duration_s},
               {"seed", c.lock.seed}};
  j["drift"] = {{"$comment", "detuning drift and photorefractive feedback; coupling_* is the "
                             "intracavity power fluctuation"},
                {"rw_sigma_hz", c.drift.rw_sigma_hz},
                {"ramp_hz_per_s", c.drift.ramp_hz_per_s},
                {"pr_gain_hz_per_w", c.drift.pr_gain_hz_per_w},
                {"pr_tau_s", c.drift.pr_tau_s},
                {"coupling_sigma_rel", c.drift.coupling_sigma_rel},
                {"coupling_tau_s", c.drift.coupling_tau_s}};
  j["alignment"] = {{"$comment", "Gaussian coupling surface and gradient-descent stepper; "
                                 "lengths in actuator units"},
                    {"eta_max", c.alignment_surface.eta_max},
                    {"width", c.alignment_surface.width},
                    {"center_drift", c.alignment_surface.center_drift},
                    {"meas_noise", c.alignment_surface.meas_noise},
                    {"step", c.alignment.step},
                    {"dither", c.alignment.dither},
                    {"cadence_hz", c.alignment.cadence_hz},
                    {"duration_s", c.alignment.duration_s},
                    {"bound", c.alignment.bound},
                    {"start_offset", c.alignment.start_offset},
                    {"seed", c.alignment.seed}};
  j["instability"] = {{"$comment", "power scan for the lock-failure study"},
                      {"powers_w", c.instability.powers_w},
                      {"n_seeds", c.instability.n_seeds}};
  j["mzi"] = {{"$comment", "phase-sensing run; sig_depth_rad 0 means calibrate so the vacuum "
                           "run reads target_snr_db"},
              {"visibility", c.sensing.mzi.visibility},
              {"input_power_w", c.sensing.mzi.input_power_w},
              {"am_freq_hz", c.sensing.mzi.am_freq_hz},
              {"sig_freq_hz", c.sensing.mzi.sig_freq_hz},
              {"sig_depth_rad", c.sensing.mzi.sig_depth_rad},
              {"eta_path", c.sensing.mzi.eta_path},
              {"sample_rate_hz", c.sensing.mzi.sample_rate_hz},
              {"duration_s", c.sensing.mzi.duration_s},
              {"seed", c.sensing.mzi.seed},
              {"source_sq_db", c.sensing.source_sq_db},
              {"rbw_hz", c.sensing.rbw_hz},
              {"target_snr_db", c.sensing.target_snr_db}};
  j["budget"] = {{"$comment", "loss-budget report options"},
                 {"projection_alpha_db_per_m", c.budget.projection_alpha_db_per_m}};
  return j;
}

inline void check_unknown_keys(const json& user, const json& schema, const std::string& path) {
  if (!user.is_object()) return;
  for (const auto& [key, value] : user.items()) {
    if (!key.empty() && key.front() == '$') continue;
    if (!schema.contains(key))
      throw config_error("config: unknown key '" + path + key + "'");
    const auto& ref = schema.at(key);
    if (ref.is_object() != value.is_object() || ref.is_array() != value.is_array())
      throw config_error("config: wrong type for '" + path + key + "'");
    if (value.is_object()) check_unknown_keys(value, ref, path + key + ".");
  }
}

template <typename T>
void assign(const json& obj, const char* key, T& out, const std::string& path) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw config_error("config: wrong type for '" + path + key + "'");
  }
}

}  // namespace detail

inline json default_config_json() { return detail::config_to_json(RunConfig{}); }

inline RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw config_error("config: document must be a JSON object");
  detail::check_unknown_keys(j, default_config_json(), "");

  RunConfig c;
  detail::assign(j, "version", c.version, "");
  if (c.version != 1)
    throw config_error("config: unsupported version " + std::to_string(c.version));
  detail::assign(j, "seed", c.seed, "");
  if (j.contains("cavity")) {
    const auto& o = j.at("cavity");
    detail::assign(o, "length_m", c.cavity.length_m, "cavity.");
    detail::assign(o, "n_eff", c.cavity.n_eff, "cavity.");
    detail::assign(o, "alpha_db_per_m", c.cavity.alpha_db_per_m, "cavity.");
    detail::assign(o, "r_hr", c.cavity.r_hr, "cavity.");
    detail::assign(o, "r_pr", c.cavity.r_pr, "cavity.");
  }
  if (j.contains("squeezing")) {
    const auto& o = j.at("squeezing");
    detail::assign(o, "eta_total", c.squeezing.eta_total, "squeezing.");
    detail::assign(o, "p_threshold_w", c.squeezing.p_threshold_w, "squeezing.");
    detail::assign(o, "hwhm_hz", c.squeezing.hwhm_hz, "squeezing.");
    detail::assign(o, "phase_noise_rad", c.squeezing.phase_noise_rad, "squeezing.");
  }
  if (j.contains("chain")) {
    c.chain.entries.clear();
    for (const auto& e : j.at("chain")) {
      EfficiencyChain::Entry entry;
      if (!e.is_object() || !e.contains("name") || !e.contains("eta"))
        throw config_error("config: chain entries need {name, eta}");
      entry.name = e.at("name").get<std::string>();
      entry.eta = e.at("eta").get<double>();
      c.chain.entries.push_back(std::move(entry));
    }
  }
  if (j.contains("photorefraction")) {
    const auto& o = j.at("photorefraction");
    detail::assign(o, "c_pr_per_w", c.photorefraction.c_pr_per_w, "photorefraction.");
    detail::assign(o, "thermo_c_per_w", c.photorefraction.thermo_c_per_w, "photorefraction.");
  }
  if (j.contains("phase_matching")) {
    const auto& o = j.at("phase_matching");
    detail::assign(o, "t_pm0_c", c.phase_matching.t_pm0_c, "phase_matching.");
    detail::assign(o, "kappa_t_rad_per_m_c", c.phase_matching.kappa_t_rad_per_m_c,
                   "phase_matching.");
    detail::assign(o, "slope_s_c_per_w", c.phase_matching.slope_s_c_per_w, "phase_matching.");
    detail::assign(o, "length_m", c.phase_matching.length_m, "phase_matching.");
  }
  if (j.contains("fit")) {
    const auto& o = j.at("fit");
    detail::assign(o, "f_sideband_hz", c.fit.f_sideband_hz, "fit.");
    detail::assign(o, "hwhm_hz", c.fit.hwhm_hz, "fit.");
    detail::assign(o, "p_over_pth", c.fit.p_over_pth, "fit.");
    detail::assign(o, "sigma_db_default", c.fit.sigma_db_default, "fit.");
    detail::assign(o, "sigma_rel_gain_default", c.fit.sigma_rel_gain_default, "fit.");
  }
  if (j.contains("lock")) {
    const auto& o = j.at("lock");
    detail::assign(o, "f_mod_hz", c.lock.f_mod_hz, "lock.");
    detail::assign(o, "mod_depth_rad", c.lock.mod_depth_rad, "lock.");
    detail::assign(o, "demod_phase_rad", c.lock.demod_phase_rad, "lock.");
    detail::assign(o, "lpf_cutoff_hz", c.lock.lpf_cutoff_hz, "lock.");
    detail::assign(o, "kp", c.lock.kp, "lock.");
    detail::assign(o, "ki", c.lock.ki, "lock.");
    detail::assign(o, "sample_rate_hz", c.lock.sample_rate_hz, "lock.");
    detail::assign(o, "duration_s", c.lock.duration_s, "lock.");
    detail::assign(o, "seed", c.lock.seed, "lock.");
  }
  if (j.contains("drift")) {
    const auto& o = j.at("drift");
    detail::assign(o, "rw_sigma_hz", c.drift.rw_sigma_hz, "drift.");
    detail::assign(o, "ramp_hz_per_s", c.drift.ramp_hz_per_s, "drift.");
    detail::assign(o, "pr_gain_hz_per_w", c.drift.pr_gain_hz_per_w, "drift.");
    detail::assign(o, "pr_tau_s", c.drift.pr_tau_s, "drift.");
    detail::assign(o, "coupling_sigma_rel", c.drift.coupling_sigma_rel, "drift.");
    detail::assign(o, "coupling_tau_s", c.drift.coupling_tau_s, "drift.");
  }
  if (j.contains("alignment")) {
    const auto& o = j.at("alignment");
    detail::assign(o, "eta_max", c.alignment_surface.eta_max, "alignment.");
    detail::assign(o, "width", c.alignment_surface.width, "alignment.");
    detail::assign(o, "center_drift", c.alignment_surface.center_drift, "alignment.");
    detail::assign(o, "meas_noise", c.alignment_surface.meas_noise, "alignment.");
    detail::assign(o, "step", c.alignment.step, "alignment.");
    detail::assign(o, "dither", c.alignment.dither, "alignment.");
    detail::assign(o, "cadence_hz", c.alignment.cadence_hz, "alignment.");
    detail::assign(o, "duration_s", c.alignment.duration_s, "alignment.");
    detail::assign(o, "bound", c.alignment.bound, "alignment.");
    detail::assign(o, "start_offset", c.alignment.start_offset, "alignment.");
    detail::assign(o, "seed", c.alignment.seed, "alignment.");
  }
  if (j.contains("instability")) {
    const auto& o = j.at("instability");
    detail::assign(o, "powers_w", c.instability.powers_w, "instability.");
    detail::assign(o, "n_seeds", c.instability.n_seeds, "instability.");
  }
  if (j.contains("mzi")) {
    const auto& o = j.at("mzi");
    detail::assign(o, "visibility", c.sensing.mzi.visibility, "mzi.");
    detail::assign(o, "input_power_w", c.sensing.mzi.input_power_w, "mzi.");
    detail::assign(o, "am_freq_hz", c.sensing.mzi.am_freq_hz, "mzi.");
    detail::assign(o, "sig_freq_hz", c.sensing.mzi.sig_freq_hz, "mzi.");
    detail::assign(o, "sig_depth_rad", c.sensing.mzi.sig_depth_rad, "mzi.");
    detail::assign(o, "eta_path", c.sensing.mzi.eta_path, "mzi.");
    detail::assign(o, "sample_rate_hz", c.sensing.mzi.sample_rate_hz, "mzi.");
    detail::assign(o, "duration_s", c.sensing.mzi.duration_s, "mzi.");
    detail::assign(o, "seed", c.sensing.mzi.seed, "mzi.");
    detail::assign(o, "source_sq_db", c.sensing.source_sq_db, "mzi.");
    detail::assign(o, "rbw_hz", c.sensing.rbw_hz, "mzi.");
    detail::assign(o, "target_snr_db", c.sensing.target_snr_db, "mzi.");
  }
  if (j.contains("budget")) {
    const auto& o = j.at("budget");
    detail::assign(o, "projection_alpha_db_per_m", c.budget.projection_alpha_db_per_m,
                   "budget.");
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw config_error("config: parse failure in " + path + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace sqzlab
