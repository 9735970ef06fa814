// Copyright 2026 The sqzchip Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "sqz/experiments.hpp"

namespace sqz {

// Full description of a simulated run: the device and the experiment
// presets.  Couplers are stored as measured anchor points (splitting ratio at
// zero volts and at one calibration voltage) and re-calibrated on load, so a
// configuration file carries only quantities with a direct measurement
// meaning.
struct ExperimentConfig {
  ChipNetlist chip;
  ShgSweepSettings shg;
  SqueezeSweepSettings squeeze;
  EntangleSettings entangle;
};

// Device and presets used throughout the tests and as the built-in default.
// The arm lengths pin the end-to-end detection efficiencies at 0.52 / 0.54.
inline ExperimentConfig reference_config() {
  ExperimentConfig cfg;
  cfg.chip.sources[0] = {0.030, 1554.45, 0.5, 370.0};
  cfg.chip.sources[1] = {0.027, 1554.45, 0.5, 370.0};
  cfg.chip.pump_filter_sr = {0.80, 0.86};
  cfg.chip.entangling_coupler = calibrate_coupler(0.72, 16.0, 0.005, 20.0);
  cfg.chip.homodyne_couplers[0] = calibrate_coupler(0.85, 20.0, 0.005, 20.0);
  cfg.chip.homodyne_couplers[1] = calibrate_coupler(0.75, 20.0, 0.005, 20.0);
  cfg.chip.lo_phase_shifters[0] = {10.0, 40.0};
  cfg.chip.lo_phase_shifters[1] = {10.0, 40.0};
  cfg.chip.signal_path[0] = {2.0, 5.950802994069269};
  cfg.chip.signal_path[1] = {2.0, 7.023520712887464};
  cfg.chip.signal_loss_db_per_cm = 0.14;
  cfg.chip.pump_loss_db_per_cm = 0.55;
  cfg.chip.facet_loss = 0.13;
  cfg.chip.detector = {0.99, 17.0};
  return cfg;  // experiment presets keep their struct defaults
}

namespace detail {

inline nlohmann::json source_to_json(const PPWaveguideSpec& s) {
  return {{"squeezing_per_sqrt_mw", s.squeezing_per_sqrt_mw},
          {"phase_match_wavelength_nm", s.phase_match_wavelength_nm},
          {"shg_fwhm_nm", s.shg_fwhm_nm},
          {"peak_conversion_pct_per_w", s.peak_conversion_pct_per_w}};
}

inline PPWaveguideSpec source_from_json(const nlohmann::json& j) {
  return {j.at("squeezing_per_sqrt_mw").get<double>(),
          j.at("phase_match_wavelength_nm").get<double>(),
          j.at("shg_fwhm_nm").get<double>(),
          j.at("peak_conversion_pct_per_w").get<double>()};
}

inline nlohmann::json coupler_to_json(const TunableCouplerSpec& c) {
  return {{"sr_at_zero", c.sr_at_zero},
          {"calibration_voltage_v", c.calibration_voltage_v},
          {"sr_at_calibration_voltage", c.min_sr},
          {"voltage_range_v", c.voltage_range_v}};
}

inline TunableCouplerSpec coupler_from_json(const nlohmann::json& j) {
  return calibrate_coupler(j.at("sr_at_zero").get<double>(),
                           j.at("calibration_voltage_v").get<double>(),
                           j.at("sr_at_calibration_voltage").get<double>(),
                           j.at("voltage_range_v").get<double>());
}

inline nlohmann::json shifter_to_json(const PhaseShifterSpec& s) {
  return {{"v_pi", s.v_pi}, {"voltage_range_v", s.voltage_range_v}};
}

inline PhaseShifterSpec shifter_from_json(const nlohmann::json& j) {
  return {j.at("v_pi").get<double>(), j.at("voltage_range_v").get<double>()};
}

inline nlohmann::json segments_to_json(const LossSegments& s) {
  return {{"before_coupler_cm", s.before_coupler_cm},
          {"after_coupler_cm", s.after_coupler_cm}};
}

inline LossSegments segments_from_json(const nlohmann::json& j) {
  return {j.at("before_coupler_cm").get<double>(),
          j.at("after_coupler_cm").get<double>()};
}

inline nlohmann::json acquisition_to_json(const AcquisitionConfig& a) {
  return {{"sample_rate_hz", a.sample_rate_hz},
          {"trace_duration_s", a.trace_duration_s},
          {"n_traces", a.n_traces},
          {"variance_window_s", a.variance_window_s},
          {"postprocess_window_s", a.postprocess_window_s}};
}

inline AcquisitionConfig acquisition_from_json(const nlohmann::json& j) {
  return {j.at("sample_rate_hz").get<double>(),
          j.at("trace_duration_s").get<double>(),
          j.at("n_traces").get<int>(),
          j.at("variance_window_s").get<double>(),
          j.at("postprocess_window_s").get<double>()};
}

}  // namespace detail

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["chip"] = {
      {"sources",
       {detail::source_to_json(cfg.chip.sources[0]),
        detail::source_to_json(cfg.chip.sources[1])}},
      {"pump_filter_sr", cfg.chip.pump_filter_sr},
      {"entangling_coupler", detail::coupler_to_json(cfg.chip.entangling_coupler)},
      {"homodyne_couplers",
       {detail::coupler_to_json(cfg.chip.homodyne_couplers[0]),
        detail::coupler_to_json(cfg.chip.homodyne_couplers[1])}},
      {"lo_phase_shifters",
       {detail::shifter_to_json(cfg.chip.lo_phase_shifters[0]),
        detail::shifter_to_json(cfg.chip.lo_phase_shifters[1])}},
      {"signal_path",
       {detail::segments_to_json(cfg.chip.signal_path[0]),
        detail::segments_to_json(cfg.chip.signal_path[1])}},
      {"signal_loss_db_per_cm", cfg.chip.signal_loss_db_per_cm},
      {"pump_loss_db_per_cm", cfg.chip.pump_loss_db_per_cm},
      {"facet_loss", cfg.chip.facet_loss},
      {"detector",
       {{"quantum_efficiency", cfg.chip.detector.quantum_efficiency},
        {"dark_clearance_db", cfg.chip.detector.dark_clearance_db}}}};
  j["shg_sweep"] = {{"lambda_min_nm", cfg.shg.lambda_min_nm},
                    {"lambda_max_nm", cfg.shg.lambda_max_nm},
                    {"n_points", cfg.shg.n_points}};
  j["squeeze_sweep"] = {
      {"powers_mw", cfg.squeeze.powers_mw},
      {"acquisition", detail::acquisition_to_json(cfg.squeeze.acquisition)},
      {"lo_scan_frequency_hz", cfg.squeeze.lo_scan_frequency_hz},
      {"modulation_frequency_hz", cfg.squeeze.modulation_frequency_hz},
      {"blocked_fraction", cfg.squeeze.blocked_fraction}};
  j["entangle"] = {
      {"pump_power_mw", cfg.entangle.pump_power_mw},
      {"acquisition", detail::acquisition_to_json(cfg.entangle.acquisition)},
      {"lo1_scan_frequency_hz", cfg.entangle.lo1_scan_frequency_hz},
      {"lo2_scan_frequency_hz", cfg.entangle.lo2_scan_frequency_hz},
      {"piezo_frequency_hz", cfg.entangle.piezo_frequency_hz},
      {"modulation_frequency_hz", cfg.entangle.modulation_frequency_hz},
      {"in_phase_trigger_offset_s", cfg.entangle.in_phase_trigger_offset_s},
      {"out_of_phase_trigger_offset_s",
       cfg.entangle.out_of_phase_trigger_offset_s},
      {"blocked_fraction", cfg.entangle.blocked_fraction},
      {"branch_average_points", cfg.entangle.branch_average_points}};
  return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  const nlohmann::json& chip = j.at("chip");
  for (int arm = 0; arm < 2; ++arm) {
    cfg.chip.sources[arm] =
        detail::source_from_json(chip.at("sources").at(arm));
    cfg.chip.pump_filter_sr[arm] =
        chip.at("pump_filter_sr").at(arm).get<double>();
    cfg.chip.homodyne_couplers[arm] =
        detail::coupler_from_json(chip.at("homodyne_couplers").at(arm));
    cfg.chip.lo_phase_shifters[arm] =
        detail::shifter_from_json(chip.at("lo_phase_shifters").at(arm));
    cfg.chip.signal_path[arm] =
        detail::segments_from_json(chip.at("signal_path").at(arm));
  }
  cfg.chip.entangling_coupler =
      detail::coupler_from_json(chip.at("entangling_coupler"));
  cfg.chip.signal_loss_db_per_cm =
      chip.at("signal_loss_db_per_cm").get<double>();
  cfg.chip.pump_loss_db_per_cm = chip.at("pump_loss_db_per_cm").get<double>();
  cfg.chip.facet_loss = chip.at("facet_loss").get<double>();
  cfg.chip.detector = {
      chip.at("detector").at("quantum_efficiency").get<double>(),
      chip.at("detector").at("dark_clearance_db").get<double>()};

  const nlohmann::json& shg = j.at("shg_sweep");
  cfg.shg = {shg.at("lambda_min_nm").get<double>(),
             shg.at("lambda_max_nm").get<double>(),
             shg.at("n_points").get<int>()};

  const nlohmann::json& sq = j.at("squeeze_sweep");
  cfg.squeeze.powers_mw = sq.at("powers_mw").get<std::vector<double>>();
  cfg.squeeze.acquisition = detail::acquisition_from_json(sq.at("acquisition"));
  cfg.squeeze.lo_scan_frequency_hz =
      sq.at("lo_scan_frequency_hz").get<double>();
  cfg.squeeze.modulation_frequency_hz =
      sq.at("modulation_frequency_hz").get<double>();
  cfg.squeeze.blocked_fraction = sq.at("blocked_fraction").get<double>();

  const nlohmann::json& en = j.at("entangle");
  cfg.entangle.pump_power_mw = en.at("pump_power_mw").get<std::array<double, 2>>();
  cfg.entangle.acquisition = detail::acquisition_from_json(en.at("acquisition"));
  cfg.entangle.lo1_scan_frequency_hz =
      en.at("lo1_scan_frequency_hz").get<double>();
  cfg.entangle.lo2_scan_frequency_hz =
      en.at("lo2_scan_frequency_hz").get<double>();
  cfg.entangle.piezo_frequency_hz = en.at("piezo_frequency_hz").get<double>();
  cfg.entangle.modulation_frequency_hz =
      en.at("modulation_frequency_hz").get<double>();
  cfg.entangle.in_phase_trigger_offset_s =
      en.at("in_phase_trigger_offset_s").get<double>();
  cfg.entangle.out_of_phase_trigger_offset_s =
      en.at("out_of_phase_trigger_offset_s").get<double>();
  cfg.entangle.blocked_fraction = en.at("blocked_fraction").get<double>();
  cfg.entangle.branch_average_points =
      en.at("branch_average_points").get<int>();
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream stream(path);
  if (!stream) {
    throw std::invalid_argument("load_config: cannot open '" + path.string() +
                                "'");
  }
  try {
    return config_from_json(nlohmann::json::parse(stream));
  } catch (const nlohmann::json::exception& error) {
    throw std::invalid_argument("load_config: '" + path.string() +
                                "': " + error.what());
  }
}

inline void save_config(const std::filesystem::path& path,
                        const ExperimentConfig& cfg) {
  std::ofstream stream(path, std::ios::binary);
  if (!stream) {
    throw std::runtime_error("save_config: cannot open '" + path.string() +
                             "' for writing");
  }
  stream << config_to_json(cfg).dump(2) << '\n';
}

}  // namespace sqz
