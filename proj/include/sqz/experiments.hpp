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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sqz/analysis.hpp"
#include "sqz/chip.hpp"
#include "sqz/drive.hpp"
#include "sqz/rng.hpp"

namespace sqz {

// ---------------------------------------------------------------------------
// Experiment presets
//
// These drive schedules share a few timing conventions:
//
//  - Each trace is half pump-blocked (shot-noise reference) and half live.
//  - The LO phase shifters are driven with full-scale ramps (+-v_pi), so the
//    measured phase advances linearly by 2 pi per ramp period and the wrap at
//    the ramp edge is invisible to every quadrature and cross-correlation.
//    The ramp phase of 3/8 period places the extremal quadrature positions in
//    the middle of the postprocess keep-regions rather than on their edges.
//  - In the entanglement run the two-mode correlations make the combined
//    photocurrents dip whenever theta_1 + theta_2 crosses 0 (sum) or pi
//    (difference) modulo 2 pi, so each combination dips periodically at the
//    combined scan rate.  The common 3/8-period ramp phase staggers those
//    dips symmetrically about the slow arm's quadrature crossings: the
//    correct combination dips a small fraction of the fast scan period away
//    from the crossing and the opposite combination dips half a fast-scan
//    period further out, outside the branch search window.
//  - The 1 kHz coupler square wave defines the postprocess grid: variance
//    windows within 50 us of a switching edge are discarded.
// ---------------------------------------------------------------------------

inline constexpr double kLoRampPhaseRad = 0.75 * kPi;  // 3/8 of a ramp period

// ---------------------------------------------------------------------------
// Small trace utilities shared by the experiment drivers
// ---------------------------------------------------------------------------

// Rescales a variance trace into shot-noise units.
inline VarianceTrace normalise_variance(VarianceTrace trace,
                                        const ShotNoiseCalibration& cal) {
  if (!(cal.level > 0.0)) {
    throw std::invalid_argument(
        "normalise_variance: calibration level must be positive");
  }
  for (std::size_t i = 0; i < trace.size(); ++i) {
    trace.variance[i] /= cal.level;
    trace.se[i] /= cal.level;
  }
  return trace;
}

// Keeps the variance windows lying entirely inside [t_min, t_max].
inline VarianceTrace slice_time_range(const VarianceTrace& input, double t_min,
                                      double t_max) {
  VarianceTrace out;
  out.window_s = input.window_s;
  out.samples_per_window = input.samples_per_window;
  out.n_traces = input.n_traces;
  const double half = 0.5 * input.window_s;
  for (std::size_t i = 0; i < input.size(); ++i) {
    if (input.time_s[i] - half >= t_min - 1e-12 &&
        input.time_s[i] + half <= t_max + 1e-12) {
      out.time_s.push_back(input.time_s[i]);
      out.variance.push_back(input.variance[i]);
      out.se.push_back(input.se[i]);
    }
  }
  return out;
}

struct FlatLevel {
  double variance = 0.0;
  double se = 0.0;
};

// Mean level of a variance trace, for phase-independent (flat) noise.
inline FlatLevel flat_level(const VarianceTrace& trace) {
  if (trace.size() == 0) {
    throw std::invalid_argument("flat_level: empty variance trace");
  }
  FlatLevel out;
  double se_sq = 0.0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out.variance += trace.variance[i];
    se_sq += trace.se[i] * trace.se[i];
  }
  const auto n = static_cast<double>(trace.size());
  out.variance /= n;
  out.se = std::sqrt(se_sq) / n;
  return out;
}

// Scan rate (rad/s) of a full-scale LO ramp: the ramp sweeps 2 A volts per
// period, i.e. 2 pi A f / v_pi radians per second.
inline double nominal_scan_rate(const PhaseShifterSpec& shifter,
                                const Waveform& lo) {
  if (lo.kind != Waveform::Kind::ramp) {
    throw std::invalid_argument("nominal_scan_rate: LO drive must be a ramp");
  }
  return 2.0 * kPi * lo.amplitude * lo.frequency_hz / shifter.v_pi;
}

// Phase intercept of the linearised LO scan in the variance-model convention
// (anti-squeezed quadrature at rate * t + phase == 0 mod pi, assuming the
// squeezing ellipse sits at angle zero).  Valid modulo pi across ramp wraps.
inline double nominal_scan_phase(const PhaseShifterSpec& shifter,
                                 const Waveform& lo, double trigger_offset_s,
                                 double t_ref, double rate) {
  const double theta =
      phase_from_voltage(shifter, waveform_value(lo, trigger_offset_s + t_ref));
  double phase = theta - rate * t_ref - kPi / 2.0;
  phase -= kPi * std::floor(phase / kPi);
  return phase;
}

// ---------------------------------------------------------------------------
// Tuning-curve sweep
// ---------------------------------------------------------------------------

struct ShgSweepSettings {
  double lambda_min_nm = 1553.2;
  double lambda_max_nm = 1555.7;
  int n_points = 126;
};

struct ShgArmResult {
  std::vector<ShgPoint> curve;
  ShgFit fit;
};

struct ShgSweepResult {
  std::array<ShgArmResult, 2> arms;
};

inline ShgSweepResult run_shg_sweep(const ChipNetlist& chip,
                                    const ShgSweepSettings& settings) {
  if (!(settings.lambda_max_nm > settings.lambda_min_nm)) {
    throw std::invalid_argument(
        "run_shg_sweep: wavelength range must have positive width");
  }
  if (settings.n_points < 4) {
    throw std::invalid_argument(
        "run_shg_sweep: need at least four wavelength points");
  }
  ShgSweepResult result;
  const double step = (settings.lambda_max_nm - settings.lambda_min_nm) /
                      (settings.n_points - 1);
  for (int arm = 0; arm < 2; ++arm) {
    ShgArmResult& out = result.arms[static_cast<std::size_t>(arm)];
    out.curve.reserve(static_cast<std::size_t>(settings.n_points));
    for (int i = 0; i < settings.n_points; ++i) {
      const double lambda = settings.lambda_min_nm + step * i;
      out.curve.push_back(
          {lambda, shg_efficiency(chip.sources[static_cast<std::size_t>(arm)],
                                  lambda)});
    }
    out.fit = fit_shg_curve(out.curve);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Squeezing vs pump power
// ---------------------------------------------------------------------------

struct SqueezeSweepSettings {
  std::vector<double> powers_mw{10.0, 25.0, 50.0, 75.0, 100.0, 125.0, 154.0};
  AcquisitionConfig acquisition{50e6, 4e-3, 40, 4e-6, 4e-4};
  double lo_scan_frequency_hz = 500.0;   // full 2 pi per ramp period
  double modulation_frequency_hz = 1000.0;  // coupler square / keep grid
  double blocked_fraction = 0.5;
};

// Both squeezers pumped at the same power with the entangling coupler parked
// at its minimum splitting ratio, so each squeezer maps onto its own detector.
inline DriveSchedule squeeze_sweep_schedule(const ChipNetlist& chip,
                                            const SqueezeSweepSettings& s,
                                            double power_mw) {
  DriveSchedule schedule;
  const double bar_v = coupler_voltage_for_sr(chip.entangling_coupler,
                                              chip.entangling_coupler.min_sr);
  schedule.electrodes["dc1"] = {Waveform::Kind::square, bar_v,
                                s.modulation_frequency_hz, 0.0, 0.0};
  for (int arm = 0; arm < 2; ++arm) {
    const auto& shifter = chip.lo_phase_shifters[static_cast<std::size_t>(arm)];
    schedule.electrodes[arm == 0 ? "lo1" : "lo2"] = {
        Waveform::Kind::ramp, shifter.v_pi, s.lo_scan_frequency_hz, 0.0,
        kLoRampPhaseRad};
  }
  schedule.pump_power_mw = {power_mw, power_mw};
  schedule.chopper = {s.acquisition.trace_duration_s, s.blocked_fraction};
  schedule.trigger_offset_s = 0.0;
  return schedule;
}

struct ArmScanResult {
  ShotNoiseCalibration shot_noise;
  VarianceTrace scan;  // shot-noise units, live span, postprocessed
  VarianceScanFit fit;
  double squeezing_db = 0.0;
  double anti_squeezing_db = 0.0;
  double se_squeezing_db = 0.0;
  double se_anti_squeezing_db = 0.0;
};

namespace detail {

inline ArmScanResult analyse_arm_scan(const std::vector<TimeTrace>& traces,
                                      const ChopperSpec& chopper,
                                      const AcquisitionConfig& acq,
                                      double modulation_period_s,
                                      double live_begin_s, double live_end_s,
                                      double scan_rate_hint) {
  ArmScanResult out;
  out.shot_noise = calibrate_shot_noise(extract_blocked(traces, chopper));
  VarianceTrace vt = windowed_variance(traces, acq.variance_window_s);
  vt = slice_time_range(vt, live_begin_s, live_end_s);
  if (acq.postprocess_window_s > 0.0) {
    vt = postprocess_select(vt, modulation_period_s, acq.postprocess_window_s);
  }
  out.scan = normalise_variance(std::move(vt), out.shot_noise);
  out.fit = fit_variance_scan(out.scan, scan_rate_hint);
  out.squeezing_db = 10.0 * std::log10(out.fit.v_minus);
  out.anti_squeezing_db = 10.0 * std::log10(out.fit.v_plus);
  out.se_squeezing_db = combine_db_uncertainty(
      variance_se_to_db(out.fit.v_minus, out.fit.se_v_minus), out.shot_noise);
  out.se_anti_squeezing_db = combine_db_uncertainty(
      variance_se_to_db(out.fit.v_plus, out.fit.se_v_plus), out.shot_noise);
  return out;
}

}  // namespace detail

struct SqueezePowerResult {
  double power_mw = 0.0;
  std::uint64_t seed = 0;
  std::array<ArmScanResult, 2> arms;
};

struct PowerFitOutcome {
  bool valid = false;
  PowerSweepFit fit;
  std::string note;
};

struct SqueezeSweepResult {
  std::vector<SqueezePowerResult> per_power;
  std::array<PowerFitOutcome, 2> power_fit;
  double raw_trace_power_mw = 0.0;
  std::array<TimeTrace, 2> raw_trace;  // first trace at the strongest power
};

inline SqueezeSweepResult run_squeeze_sweep(const ChipNetlist& chip,
                                            const SqueezeSweepSettings& s,
                                            std::uint64_t master_seed) {
  if (s.powers_mw.empty()) {
    throw std::invalid_argument("run_squeeze_sweep: empty power list");
  }
  for (double p : s.powers_mw) {
    if (p < 0.0) {
      throw std::invalid_argument(
          "run_squeeze_sweep: pump powers must be non-negative");
    }
  }
  validate_acquisition(s.acquisition);

  const double live_begin = s.blocked_fraction * s.acquisition.trace_duration_s;
  const double live_end = s.acquisition.trace_duration_s;
  const double modulation_period = 1.0 / s.modulation_frequency_hz;
  const std::size_t strongest =
      static_cast<std::size_t>(std::max_element(s.powers_mw.begin(),
                                                s.powers_mw.end()) -
                               s.powers_mw.begin());

  SqueezeSweepResult result;
  result.per_power.reserve(s.powers_mw.size());
  for (std::size_t i = 0; i < s.powers_mw.size(); ++i) {
    const DriveSchedule schedule =
        squeeze_sweep_schedule(chip, s, s.powers_mw[i]);
    const std::uint64_t seed = derive_seed(master_seed, i);
    const ExperimentRecord record =
        run_experiment(chip, schedule, s.acquisition, seed);

    SqueezePowerResult point;
    point.power_mw = s.powers_mw[i];
    point.seed = seed;
    for (int arm = 0; arm < 2; ++arm) {
      const auto& shifter =
          chip.lo_phase_shifters[static_cast<std::size_t>(arm)];
      const Waveform& lo =
          schedule.electrodes.at(arm == 0 ? "lo1" : "lo2");
      point.arms[static_cast<std::size_t>(arm)] = detail::analyse_arm_scan(
          record.detectors[static_cast<std::size_t>(arm)], schedule.chopper,
          s.acquisition, modulation_period, live_begin, live_end,
          nominal_scan_rate(shifter, lo));
    }
    if (i == strongest) {
      result.raw_trace_power_mw = s.powers_mw[i];
      result.raw_trace = {record.detectors[0].front(),
                          record.detectors[1].front()};
    }
    result.per_power.push_back(std::move(point));
  }

  // Power-law fit per arm; it declines gracefully when the sweep cannot
  // identify the parameters (fewer than two positive pump powers).
  for (int arm = 0; arm < 2; ++arm) {
    std::vector<PowerSweepPoint> points;
    for (const SqueezePowerResult& point : result.per_power) {
      if (point.power_mw > 0.0) {
        const ArmScanResult& scan = point.arms[static_cast<std::size_t>(arm)];
        points.push_back({point.power_mw, scan.fit.v_minus, scan.fit.v_plus});
      }
    }
    PowerFitOutcome& outcome = result.power_fit[static_cast<std::size_t>(arm)];
    if (points.size() < 3) {
      outcome.note =
          "not identifiable: need at least three positive pump powers";
      continue;
    }
    try {
      outcome.fit = fit_power_sweep(points);
      outcome.valid = true;
    } catch (const std::invalid_argument& error) {
      outcome.note = std::string("not identifiable: ") + error.what();
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Entanglement run
//
// Two acquisitions against the same 50 Hz pump-phase ramp: one triggered so
// the live window straddles zero relative pump phase (separable squeezed
// pair) and one straddling pi (entangled pair).  The quadrature positions
// measured in the first case carry over to the second because the trigger
// offsets are congruent modulo every LO scan period.
// ---------------------------------------------------------------------------

struct EntangleSettings {
  std::array<double, 2> pump_power_mw{122.0, 122.0};
  AcquisitionConfig acquisition{50e6, 2e-3, 10, 2.5e-6, 4e-4};
  double lo1_scan_frequency_hz = 500.0;
  double lo2_scan_frequency_hz = 5000.0;
  double piezo_frequency_hz = 10.0;
  double modulation_frequency_hz = 1000.0;  // coupler square / keep grid
  double in_phase_trigger_offset_s = 48.5e-3;
  double out_of_phase_trigger_offset_s = 98.5e-3;
  double blocked_fraction = 0.5;
  int branch_average_points = 4;
};

namespace detail {

inline bool is_near_integer(double x) {
  return std::abs(x - std::round(x)) < 1e-9;
}

}  // namespace detail

inline void validate_entangle_settings(const EntangleSettings& s) {
  const int pumps_on = (s.pump_power_mw[0] > 0.0 ? 1 : 0) +
                       (s.pump_power_mw[1] > 0.0 ? 1 : 0);
  if (s.pump_power_mw[0] < 0.0 || s.pump_power_mw[1] < 0.0) {
    throw std::invalid_argument(
        "entangle run: pump powers must be non-negative");
  }
  if (pumps_on == 1) {
    throw std::invalid_argument(
        "entangle run: both pumps must be driven together (a single pump "
        "cannot produce the entangled pair)");
  }
  const double dt =
      s.out_of_phase_trigger_offset_s - s.in_phase_trigger_offset_s;
  if (!detail::is_near_integer(dt * s.lo1_scan_frequency_hz) ||
      !detail::is_near_integer(dt * s.lo2_scan_frequency_hz) ||
      !detail::is_near_integer(dt * s.modulation_frequency_hz)) {
    throw std::invalid_argument(
        "entangle run: trigger offsets must be congruent modulo the LO scan "
        "periods so quadrature positions transfer between the two cases");
  }
  if (!detail::is_near_integer(dt * s.piezo_frequency_hz - 0.5)) {
    throw std::invalid_argument(
        "entangle run: trigger offsets must differ by half a pump-phase scan "
        "period");
  }
}

inline DriveSchedule entangle_schedule(const ChipNetlist& chip,
                                       const EntangleSettings& s,
                                       double trigger_offset_s) {
  DriveSchedule schedule;
  const double balanced_v =
      coupler_voltage_for_sr(chip.entangling_coupler, 0.5);
  schedule.electrodes["dc1"] = {Waveform::Kind::square, balanced_v,
                                s.modulation_frequency_hz, 0.0, 0.0};
  schedule.electrodes["lo1"] = {Waveform::Kind::ramp,
                                chip.lo_phase_shifters[0].v_pi,
                                s.lo1_scan_frequency_hz, 0.0, kLoRampPhaseRad};
  schedule.electrodes["lo2"] = {Waveform::Kind::ramp,
                                chip.lo_phase_shifters[1].v_pi,
                                s.lo2_scan_frequency_hz, 0.0, kLoRampPhaseRad};
  schedule.pump_power_mw = s.pump_power_mw;
  // Pump 1 phase rides the piezo ramp (2 pi per period, zero mid-period).
  schedule.pump_phase_drive[0] = {Waveform::Kind::ramp, kPi,
                                  s.piezo_frequency_hz, 0.0, 0.0};
  schedule.chopper = {s.acquisition.trace_duration_s, s.blocked_fraction};
  schedule.trigger_offset_s = trigger_offset_s;
  return schedule;
}

struct EntangleCaseResult {
  double trigger_offset_s = 0.0;
  std::uint64_t seed = 0;
  std::array<ShotNoiseCalibration, 2> shot_noise;
  std::array<VarianceTrace, 2> arm_scan;  // shot-noise units
  VarianceTrace combined_sum;             // (i1 + i2) / sqrt(2), SNU
  VarianceTrace combined_diff;            // (i1 - i2) / sqrt(2), SNU
};

struct EntangleRunResult {
  EntangleCaseResult in_phase;
  EntangleCaseResult out_of_phase;
  std::array<ArmScanResult, 2> in_phase_arms;
  // Linearised quadrature frame used for locating the branch positions.
  std::array<double, 2> scan_rate_rad_per_s{0.0, 0.0};
  std::array<double, 2> scan_phase_rad{0.0, 0.0};
  bool frame_from_fit = false;
  std::array<FlatLevel, 2> out_arm_level;
  std::array<double, 2> out_arm_level_db{0.0, 0.0};
  std::array<double, 2> out_arm_level_se_db{0.0, 0.0};
  InseparabilityReport report;
};

namespace detail {

// Finds one inseparability branch: enumerates the times where arm 1 crosses
// the target quadrature, and measures the deepest combined-variance minimum
// near each crossing.  The search window spans 0.45 of the fast arm's
// half-scan period: wide enough for the staggered dip of the correct
// photocurrent combination, narrow enough to exclude the dip of the opposite
// combination half a fast-scan period away.  The first crossing with enough
// usable variance points wins.
inline BranchMeasurement locate_branch(const VarianceTrace& sum_trace,
                                       const VarianceTrace& diff_trace,
                                       double target_phase, double rate_1,
                                       double phase_1, double rate_2,
                                       double live_begin_s, double live_end_s,
                                       int average_points) {
  const double spacing = kPi / rate_1;
  const double halfwidth = 0.45 * kPi / rate_2;
  double t = (target_phase - phase_1) / rate_1;
  t -= spacing * std::floor((t - live_begin_s) / spacing);
  std::string failure;
  for (; t <= live_end_s + 1e-12; t += spacing) {
    try {
      return measure_branch(sum_trace, diff_trace, t, halfwidth, rate_1,
                            average_points);
    } catch (const std::invalid_argument& error) {
      failure = error.what();
    }
  }
  throw std::runtime_error(
      "entangle run: no usable quadrature crossing for a branch (" + failure +
      ")");
}

}  // namespace detail

inline EntangleRunResult run_entangle(const ChipNetlist& chip,
                                      const EntangleSettings& s,
                                      std::uint64_t master_seed) {
  validate_entangle_settings(s);
  validate_acquisition(s.acquisition);

  const double live_begin = s.blocked_fraction * s.acquisition.trace_duration_s;
  const double live_end = s.acquisition.trace_duration_s;
  const double modulation_period = 1.0 / s.modulation_frequency_hz;

  EntangleRunResult result;
  const auto run_case = [&](double trigger_offset,
                            std::uint64_t stream) -> EntangleCaseResult {
    const DriveSchedule schedule = entangle_schedule(chip, s, trigger_offset);
    const std::uint64_t seed = derive_seed(master_seed, stream);
    const ExperimentRecord record =
        run_experiment(chip, schedule, s.acquisition, seed);

    EntangleCaseResult out;
    out.trigger_offset_s = trigger_offset;
    out.seed = seed;
    for (int arm = 0; arm < 2; ++arm) {
      out.shot_noise[static_cast<std::size_t>(arm)] = calibrate_shot_noise(
          extract_blocked(record.detectors[static_cast<std::size_t>(arm)],
                          schedule.chopper));
    }

    const auto reduce = [&](const std::vector<TimeTrace>& traces,
                            bool to_snu,
                            const ShotNoiseCalibration& cal) -> VarianceTrace {
      VarianceTrace vt = windowed_variance(traces, s.acquisition.variance_window_s);
      vt = slice_time_range(vt, live_begin, live_end);
      if (s.acquisition.postprocess_window_s > 0.0) {
        vt = postprocess_select(vt, modulation_period,
                                s.acquisition.postprocess_window_s);
      }
      return to_snu ? normalise_variance(std::move(vt), cal) : vt;
    };

    for (int arm = 0; arm < 2; ++arm) {
      out.arm_scan[static_cast<std::size_t>(arm)] =
          reduce(record.detectors[static_cast<std::size_t>(arm)], true,
                 out.shot_noise[static_cast<std::size_t>(arm)]);
    }

    std::vector<TimeTrace> sums, diffs;
    sums.reserve(record.detectors[0].size());
    diffs.reserve(record.detectors[0].size());
    for (std::size_t j = 0; j < record.detectors[0].size(); ++j) {
      sums.push_back(combine_photocurrents(
          record.detectors[0][j], record.detectors[1][j],
          out.shot_noise[0].level, out.shot_noise[1].level,
          CombineSign::plus));
      diffs.push_back(combine_photocurrents(
          record.detectors[0][j], record.detectors[1][j],
          out.shot_noise[0].level, out.shot_noise[1].level,
          CombineSign::minus));
    }
    // combine_photocurrents already normalises to shot-noise units.
    out.combined_sum = reduce(sums, false, out.shot_noise[0]);
    out.combined_diff = reduce(diffs, false, out.shot_noise[0]);
    return out;
  };

  result.in_phase = run_case(s.in_phase_trigger_offset_s, 0);
  result.out_of_phase = run_case(s.out_of_phase_trigger_offset_s, 1);

  // Quadrature positions from the separable (in-phase) case.
  const DriveSchedule in_schedule =
      entangle_schedule(chip, s, s.in_phase_trigger_offset_s);
  bool frame_ok = true;
  for (int arm = 0; arm < 2; ++arm) {
    const auto& shifter = chip.lo_phase_shifters[static_cast<std::size_t>(arm)];
    const Waveform& lo = in_schedule.electrodes.at(arm == 0 ? "lo1" : "lo2");
    const double rate = nominal_scan_rate(shifter, lo);

    ArmScanResult& scan = result.in_phase_arms[static_cast<std::size_t>(arm)];
    scan.shot_noise = result.in_phase.shot_noise[static_cast<std::size_t>(arm)];
    scan.scan = result.in_phase.arm_scan[static_cast<std::size_t>(arm)];
    scan.fit = fit_variance_scan(scan.scan, rate);
    scan.squeezing_db = 10.0 * std::log10(scan.fit.v_minus);
    scan.anti_squeezing_db = 10.0 * std::log10(scan.fit.v_plus);
    scan.se_squeezing_db = combine_db_uncertainty(
        variance_se_to_db(scan.fit.v_minus, scan.fit.se_v_minus),
        scan.shot_noise);
    scan.se_anti_squeezing_db = combine_db_uncertainty(
        variance_se_to_db(scan.fit.v_plus, scan.fit.se_v_plus),
        scan.shot_noise);

    frame_ok = frame_ok && scan.fit.converged && scan.fit.phase_identifiable;
    result.scan_rate_rad_per_s[static_cast<std::size_t>(arm)] =
        frame_ok ? scan.fit.scan_rate : rate;
    result.scan_phase_rad[static_cast<std::size_t>(arm)] =
        frame_ok ? scan.fit.phase
                 : nominal_scan_phase(shifter, lo, s.in_phase_trigger_offset_s,
                                      0.5 * (live_begin + live_end), rate);
  }
  if (!frame_ok) {
    // Degenerate in-phase statistics (e.g. both pumps off): fall back to the
    // schedule-nominal scan frame for both arms.
    for (int arm = 0; arm < 2; ++arm) {
      const auto& shifter =
          chip.lo_phase_shifters[static_cast<std::size_t>(arm)];
      const Waveform& lo = in_schedule.electrodes.at(arm == 0 ? "lo1" : "lo2");
      const double rate = nominal_scan_rate(shifter, lo);
      result.scan_rate_rad_per_s[static_cast<std::size_t>(arm)] = rate;
      result.scan_phase_rad[static_cast<std::size_t>(arm)] =
          nominal_scan_phase(shifter, lo, s.in_phase_trigger_offset_s,
                             0.5 * (live_begin + live_end), rate);
    }
  }
  result.frame_from_fit = frame_ok;

  // Flat arm levels of the out-of-phase case.
  for (int arm = 0; arm < 2; ++arm) {
    const FlatLevel level =
        flat_level(result.out_of_phase.arm_scan[static_cast<std::size_t>(arm)]);
    result.out_arm_level[static_cast<std::size_t>(arm)] = level;
    result.out_arm_level_db[static_cast<std::size_t>(arm)] =
        10.0 * std::log10(level.variance);
    result.out_arm_level_se_db[static_cast<std::size_t>(arm)] =
        combine_db_uncertainty(
            variance_se_to_db(level.variance, level.se),
            result.out_of_phase.shot_noise[static_cast<std::size_t>(arm)]);
  }

  // Branch minima of the entangled case at the anti-squeezed (plus) and
  // squeezed (minus) quadrature positions.
  const BranchMeasurement plus_branch = detail::locate_branch(
      result.out_of_phase.combined_sum, result.out_of_phase.combined_diff,
      0.0, result.scan_rate_rad_per_s[0], result.scan_phase_rad[0],
      result.scan_rate_rad_per_s[1], live_begin, live_end,
      s.branch_average_points);
  const BranchMeasurement minus_branch = detail::locate_branch(
      result.out_of_phase.combined_sum, result.out_of_phase.combined_diff,
      kPi / 2.0, result.scan_rate_rad_per_s[0], result.scan_phase_rad[0],
      result.scan_rate_rad_per_s[1], live_begin, live_end,
      s.branch_average_points);
  result.report = inseparability(plus_branch, minus_branch);
  return result;
}

}  // namespace sqz
