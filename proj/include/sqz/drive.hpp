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

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "sqz/chip.hpp"
#include "sqz/rng.hpp"
#include "sqz/waveform.hpp"

namespace sqz {

// ---------------------------------------------------------------------------
// Drive schedules and acquisition
//
// Timing model.  Acquisition is burst-mode: every trace re-triggers the same
// schedule.  Waveforms are evaluated at the absolute schedule time
// t = trigger_offset_s + t_local, so the trigger offset selects which part of
// a slow modulation (e.g. the pump-phase scan) a trace observes.  The chopper
// is timed from the trace start, because the acquisition trigger derives from
// the chopper itself; while blocked it forces both pump powers to zero.
// ---------------------------------------------------------------------------

struct ChopperSpec {
  double period_s = 0.0;
  double blocked_fraction = 0.0;  // blocked during the first part of a period

  bool blocked_at(double t_local) const {
    if (period_s <= 0.0 || blocked_fraction <= 0.0) {
      return false;
    }
    const double into = t_local - period_s * std::floor(t_local / period_s);
    return into < blocked_fraction * period_s;
  }
};

struct DriveSchedule {
  std::map<std::string, Waveform> electrodes;       // name -> drive waveform
  std::array<double, 2> pump_power_mw{0.0, 0.0};
  std::array<double, 2> pump_phase_rad{0.0, 0.0};   // static phase offsets
  std::array<Waveform, 2> pump_phase_drive;         // e.g. piezo phase scan
  ChopperSpec chopper;
  double trigger_offset_s = 0.0;
};

struct AcquisitionConfig {
  double sample_rate_hz = 0.0;
  double trace_duration_s = 0.0;
  int n_traces = 0;
  double variance_window_s = 0.0;
  // Width of the kept region centred in each modulation half-period; zero
  // keeps everything.  See postprocess_select().
  double postprocess_window_s = 0.0;
};

// Raw homodyne record of one trace; sample i sits at t_local = i * dt.
struct TimeTrace {
  double dt = 0.0;
  std::vector<double> samples;
};

// Variance of consecutive windows, averaged across traces.
struct VarianceTrace {
  std::vector<double> time_s;    // window centres (trace-local time)
  std::vector<double> variance;  // mean across traces of the window variance
  std::vector<double> se;        // standard error of that mean
  double window_s = 0.0;
  int samples_per_window = 0;
  int n_traces = 0;

  std::size_t size() const { return time_s.size(); }
};

struct ShotNoiseCalibration {
  double level = 1.0;   // mean variance of the calibration windows
  double se_db = 0.0;   // standard error of the level, in dB
  int n_windows = 0;
};

struct ExperimentRecord {
  std::array<std::vector<TimeTrace>, 2> detectors;  // index 0 -> HD1
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

inline void validate_schedule(const ChipNetlist& chip,
                              const DriveSchedule& schedule) {
  static const char* kKnown[] = {"dc1", "dc4", "dc5", "lo1", "lo2"};
  for (const auto& [name, waveform] : schedule.electrodes) {
    bool known = false;
    for (const char* candidate : kKnown) {
      known = known || name == candidate;
    }
    if (!known) {
      throw std::invalid_argument("validate_schedule: unknown electrode '" +
                                  name + "'");
    }
    validate_waveform(waveform, name);
  }
  for (int arm = 0; arm < 2; ++arm) {
    if (schedule.pump_power_mw[arm] < 0.0) {
      throw std::invalid_argument(
          "validate_schedule: pump power must be non-negative");
    }
    validate_waveform(schedule.pump_phase_drive[arm],
                      arm == 0 ? "pump_phase_1" : "pump_phase_2");
  }
  if (schedule.chopper.blocked_fraction < 0.0 ||
      schedule.chopper.blocked_fraction >= 1.0) {
    throw std::invalid_argument(
        "validate_schedule: chopper blocked fraction must lie in [0, 1)");
  }
  if (schedule.chopper.blocked_fraction > 0.0 &&
      !(schedule.chopper.period_s > 0.0)) {
    throw std::invalid_argument(
        "validate_schedule: chopper gating needs a positive period");
  }
  if (schedule.trigger_offset_s < 0.0) {
    throw std::invalid_argument(
        "validate_schedule: trigger offset must be non-negative");
  }
  (void)chip;
}

inline void validate_acquisition(const AcquisitionConfig& acq) {
  if (!(acq.sample_rate_hz > 0.0) || !(acq.trace_duration_s > 0.0)) {
    throw std::invalid_argument(
        "validate_acquisition: sample rate and trace duration must be positive");
  }
  if (acq.n_traces < 1) {
    throw std::invalid_argument(
        "validate_acquisition: need at least one trace");
  }
  const double window_samples = acq.variance_window_s * acq.sample_rate_hz;
  if (!(window_samples >= 2.0)) {
    throw std::invalid_argument(
        "validate_acquisition: variance window must span at least two samples");
  }
  if (acq.postprocess_window_s < 0.0) {
    throw std::invalid_argument(
        "validate_acquisition: postprocess window must be non-negative");
  }
}

// ---------------------------------------------------------------------------
// The sampling engine
// ---------------------------------------------------------------------------

namespace detail {

// Per-sample simulation engine.  Rebuilds the 2-mode detected state only when
// a state-affecting parameter changes; LO phases never force a rebuild since
// the measured angle is applied analytically at readout.
class ChipSampler {
 public:
  explicit ChipSampler(const ChipNetlist& chip)
      : chip_(&chip), state_(vacuum(2)) {
    for (int arm = 0; arm < 2; ++arm) {
      t_before_[arm] =
          std::pow(10.0, -0.1 * chip.signal_loss_db_per_cm *
                             chip.signal_path[arm].before_coupler_cm);
      t_after_[arm] =
          std::pow(10.0, -0.1 * chip.signal_loss_db_per_cm *
                             chip.signal_path[arm].after_coupler_cm);
    }
    eta_detect_ = chip.detector.efficiency();
  }

  void set_point(double r_1, double angle_1, double r_2, double angle_2,
                 double splitting_ratio) {
    const std::array<double, 5> key{r_1, angle_1, r_2, angle_2,
                                    splitting_ratio};
    if (key == key_) {
      return;
    }
    key_ = key;
    // Reset to vacuum in place (mean stays zero throughout: no displacement
    // operations occur in this chain).
    state_.cov.setIdentity();
    squeeze(state_, 0, r_1, angle_1);
    squeeze(state_, 1, r_2, angle_2);
    for (int arm = 0; arm < 2; ++arm) {
      loss(state_, arm, t_before_[arm]);
      loss(state_, arm, chip_->pump_filter_sr[arm]);
    }
    beamsplitter(state_, 0, 1, splitting_ratio);
    for (int arm = 0; arm < 2; ++arm) {
      loss(state_, arm, t_after_[arm]);
      loss(state_, arm, 1.0 - chip_->facet_loss);
      loss(state_, arm, eta_detect_);
    }
  }

  // Second moments of the two measured quadratures at the given LO angles.
  void measure(double theta_1, double theta_2, double& v11, double& v22,
               double& v12) const {
    v11 = quadrature_variance(state_, 0, theta_1);
    v22 = quadrature_variance(state_, 1, theta_2);
    v12 = quadrature_covariance(state_, 0, theta_1, 1, theta_2);
  }

  const GaussianState& state() const { return state_; }

 private:
  const ChipNetlist* chip_;
  GaussianState state_;
  double t_before_[2] = {1.0, 1.0};
  double t_after_[2] = {1.0, 1.0};
  double eta_detect_ = 1.0;
  std::array<double, 5> key_{std::numeric_limits<double>::quiet_NaN(), 0.0,
                             0.0, 0.0, 0.0};
};

inline const Waveform* find_waveform(const DriveSchedule& schedule,
                                     const char* name) {
  const auto it = schedule.electrodes.find(name);
  return it == schedule.electrodes.end() ? nullptr : &it->second;
}

}  // namespace detail

// Simulates the homodyne records of both detectors.  Samples within the
// acquisition bandwidth are treated as independent homodyne draws (white
// noise in band); the two detectors are drawn jointly so that quadrature
// cross-correlations survive into the photocurrents.
inline ExperimentRecord run_experiment(const ChipNetlist& chip,
                                       const DriveSchedule& schedule,
                                       const AcquisitionConfig& acq,
                                       std::uint64_t seed) {
  validate_schedule(chip, schedule);
  validate_acquisition(acq);

  const auto n_samples = static_cast<std::size_t>(
      std::llround(acq.trace_duration_s * acq.sample_rate_hz));
  if (n_samples == 0) {
    throw std::invalid_argument("run_experiment: empty trace");
  }
  const double dt = 1.0 / acq.sample_rate_hz;

  const Waveform* dc1 = detail::find_waveform(schedule, "dc1");
  const Waveform* lo1 = detail::find_waveform(schedule, "lo1");
  const Waveform* lo2 = detail::find_waveform(schedule, "lo2");
  const double sr_static =
      coupler_splitting_ratio(chip.entangling_coupler, 0.0);

  detail::ChipSampler sampler(chip);
  GaussianSampler rng(seed);

  ExperimentRecord record;
  record.detectors[0].reserve(acq.n_traces);
  record.detectors[1].reserve(acq.n_traces);

  for (int trace = 0; trace < acq.n_traces; ++trace) {
    TimeTrace hd1{dt, std::vector<double>(n_samples)};
    TimeTrace hd2{dt, std::vector<double>(n_samples)};
    for (std::size_t i = 0; i < n_samples; ++i) {
      const double t_local = static_cast<double>(i) * dt;
      const double t = schedule.trigger_offset_s + t_local;
      const bool blocked = schedule.chopper.blocked_at(t_local);

      double r_1 = 0.0, r_2 = 0.0;
      if (!blocked) {
        r_1 = squeezing_from_pump(chip.sources[0], schedule.pump_power_mw[0]);
        r_2 = squeezing_from_pump(chip.sources[1], schedule.pump_power_mw[1]);
      }
      const double angle_1 =
          0.5 * (schedule.pump_phase_rad[0] +
                 waveform_value(schedule.pump_phase_drive[0], t));
      const double angle_2 =
          0.5 * (schedule.pump_phase_rad[1] +
                 waveform_value(schedule.pump_phase_drive[1], t));
      const double sr =
          dc1 ? coupler_splitting_ratio(chip.entangling_coupler,
                                        waveform_value(*dc1, t))
              : sr_static;
      sampler.set_point(r_1, angle_1, r_2, angle_2, sr);

      double theta_1 = 0.0, theta_2 = 0.0;
      if (lo1 != nullptr) {
        const double v = waveform_value(*lo1, t);
        detail::check_voltage_range("lo1", v,
                                    chip.lo_phase_shifters[0].voltage_range_v);
        theta_1 = phase_from_voltage(chip.lo_phase_shifters[0], v);
      }
      if (lo2 != nullptr) {
        const double v = waveform_value(*lo2, t);
        detail::check_voltage_range("lo2", v,
                                    chip.lo_phase_shifters[1].voltage_range_v);
        theta_2 = phase_from_voltage(chip.lo_phase_shifters[1], v);
      }

      double v11, v22, v12;
      sampler.measure(theta_1, theta_2, v11, v22, v12);
      // Joint draw through the Cholesky factor of the 2x2 quadrature
      // covariance; see sample_quadrature_pair() for the rationale.
      const double l11 = std::sqrt(v11);
      const double l21 = v12 / l11;
      const double l22 = std::sqrt(std::max(v22 - l21 * l21, 0.0));
      const double z1 = rng.normal();
      const double z2 = rng.normal();
      hd1.samples[i] = l11 * z1;
      hd2.samples[i] = l21 * z1 + l22 * z2;
    }
    record.detectors[0].push_back(std::move(hd1));
    record.detectors[1].push_back(std::move(hd2));
  }
  return record;
}

// ---------------------------------------------------------------------------
// Trace statistics
// ---------------------------------------------------------------------------

namespace detail {

inline double window_variance(const std::vector<double>& samples,
                              std::size_t begin, std::size_t count) {
  double mean = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    mean += samples[begin + i];
  }
  mean /= static_cast<double>(count);
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double d = samples[begin + i] - mean;
    sum_sq += d * d;
  }
  return sum_sq / static_cast<double>(count - 1);  // unbiased
}

inline double sample_standard_deviation(const std::vector<double>& values) {
  const auto n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double sum_sq = 0.0;
  for (double v : values) sum_sq += (v - mean) * (v - mean);
  return std::sqrt(sum_sq / (n - 1.0));
}

}  // namespace detail

// Splits each trace into consecutive windows of variance_window_s, computes
// the unbiased variance per window and trace, and averages across traces.
// The standard error comes from the across-trace scatter when more than one
// trace is available, and from the chi-squared width sqrt(2 / (w - 1)) of a
// single window otherwise.
inline VarianceTrace windowed_variance(const std::vector<TimeTrace>& traces,
                                       double variance_window_s) {
  if (traces.empty()) {
    throw std::invalid_argument("windowed_variance: no traces");
  }
  const double dt = traces.front().dt;
  const std::size_t length = traces.front().samples.size();
  for (const TimeTrace& trace : traces) {
    if (trace.dt != dt || trace.samples.size() != length) {
      throw std::invalid_argument(
          "windowed_variance: traces must share sample rate and length");
    }
  }
  const auto window = static_cast<std::size_t>(
      std::llround(variance_window_s / dt));
  if (window < 2 || window > length) {
    throw std::invalid_argument(
        "windowed_variance: window must span [2, trace length] samples");
  }
  const std::size_t n_windows = length / window;
  const std::size_t n_traces = traces.size();

  VarianceTrace out;
  out.window_s = static_cast<double>(window) * dt;
  out.samples_per_window = static_cast<int>(window);
  out.n_traces = static_cast<int>(n_traces);
  out.time_s.reserve(n_windows);
  out.variance.reserve(n_windows);
  out.se.reserve(n_windows);

  std::vector<double> per_trace(n_traces);
  for (std::size_t k = 0; k < n_windows; ++k) {
    for (std::size_t j = 0; j < n_traces; ++j) {
      per_trace[j] =
          detail::window_variance(traces[j].samples, k * window, window);
    }
    double mean = 0.0;
    for (double v : per_trace) mean += v;
    mean /= static_cast<double>(n_traces);
    double se;
    if (n_traces > 1) {
      se = detail::sample_standard_deviation(per_trace) /
           std::sqrt(static_cast<double>(n_traces));
    } else {
      se = mean * std::sqrt(2.0 / static_cast<double>(window - 1));
    }
    out.time_s.push_back((static_cast<double>(k) + 0.5) *
                         static_cast<double>(window) * dt);
    out.variance.push_back(mean);
    out.se.push_back(se);
  }
  return out;
}

// Keeps only the variance windows lying entirely inside a keep_window_s wide
// region centred in each half-period of the given modulation, discarding data
// near the modulation edges.
inline VarianceTrace postprocess_select(const VarianceTrace& input,
                                        double modulation_period_s,
                                        double keep_window_s) {
  if (!(modulation_period_s > 0.0) || !(keep_window_s > 0.0)) {
    throw std::invalid_argument(
        "postprocess_select: period and keep window must be positive");
  }
  const double half = 0.5 * modulation_period_s;
  const double window_s = input.window_s;
  if (!(window_s > 0.0)) {
    throw std::invalid_argument("postprocess_select: malformed variance trace");
  }
  VarianceTrace out;
  out.window_s = input.window_s;
  out.samples_per_window = input.samples_per_window;
  out.n_traces = input.n_traces;
  for (std::size_t k = 0; k < input.size(); ++k) {
    const double centre = input.time_s[k];
    const double half_index = std::floor(centre / half);
    const double keep_centre = (half_index + 0.5) * half;
    const double begin = centre - 0.5 * window_s;
    const double end = centre + 0.5 * window_s;
    if (begin >= keep_centre - 0.5 * keep_window_s - 1e-12 &&
        end <= keep_centre + 0.5 * keep_window_s + 1e-12) {
      out.time_s.push_back(input.time_s[k]);
      out.variance.push_back(input.variance[k]);
      out.se.push_back(input.se[k]);
    }
  }
  return out;
}

// Concatenates the chopper-blocked spans of all traces, in trace order.
inline TimeTrace extract_blocked(const std::vector<TimeTrace>& traces,
                                 const ChopperSpec& chopper) {
  TimeTrace out;
  for (const TimeTrace& trace : traces) {
    out.dt = trace.dt;
    for (std::size_t i = 0; i < trace.samples.size(); ++i) {
      if (chopper.blocked_at(static_cast<double>(i) * trace.dt)) {
        out.samples.push_back(trace.samples[i]);
      }
    }
  }
  return out;
}

// Calibration protocol: the shot-noise level is the mean variance of
// `n_windows` windows of `window_s`, taken from pump-blocked data; its
// uncertainty follows from the window-to-window scatter.
inline ShotNoiseCalibration calibrate_shot_noise(const TimeTrace& blocked,
                                                 double window_s = 4e-4,
                                                 int n_windows = 5) {
  if (!(blocked.dt > 0.0)) {
    throw std::invalid_argument("calibrate_shot_noise: trace has no sample rate");
  }
  if (n_windows < 2) {
    throw std::invalid_argument("calibrate_shot_noise: need >= 2 windows");
  }
  const auto window =
      static_cast<std::size_t>(std::llround(window_s / blocked.dt));
  if (window < 2) {
    throw std::invalid_argument(
        "calibrate_shot_noise: window must span at least two samples");
  }
  if (blocked.samples.size() < window * static_cast<std::size_t>(n_windows)) {
    throw std::invalid_argument(
        "calibrate_shot_noise: not enough blocked data for " +
        std::to_string(n_windows) + " windows");
  }
  std::vector<double> variances(n_windows);
  for (int k = 0; k < n_windows; ++k) {
    variances[k] = detail::window_variance(
        blocked.samples, static_cast<std::size_t>(k) * window, window);
  }
  double mean = 0.0;
  for (double v : variances) mean += v;
  mean /= n_windows;
  const double se =
      detail::sample_standard_deviation(variances) / std::sqrt(n_windows);

  ShotNoiseCalibration cal;
  cal.level = mean;
  cal.se_db = 10.0 / std::log(10.0) * (se / mean);
  cal.n_windows = n_windows;
  return cal;
}

// Noise level relative to shot noise, in dB.
inline double to_db(double variance, const ShotNoiseCalibration& cal) {
  if (!(variance > 0.0) || !(cal.level > 0.0)) {
    throw std::invalid_argument("to_db: variance and shot-noise level must be positive");
  }
  return 10.0 * std::log10(variance / cal.level);
}

// dB uncertainty with the shot-noise calibration error folded in
// quadratically.
inline double combine_db_uncertainty(double se_db,
                                     const ShotNoiseCalibration& cal) {
  return std::sqrt(se_db * se_db + cal.se_db * cal.se_db);
}

// Statistical error (dB) of a variance estimate `v` with standard error `se`.
inline double variance_se_to_db(double v, double se) {
  if (!(v > 0.0)) {
    throw std::invalid_argument("variance_se_to_db: variance must be positive");
  }
  return 10.0 / std::log(10.0) * (se / v);
}

}  // namespace sqz
