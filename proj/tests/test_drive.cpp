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

#include "sqz/drive.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "test_support.hpp"

namespace {

using namespace sqz;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("waveform evaluation") {
  SECTION("constant") {
    const Waveform w{Waveform::Kind::constant, 3.0, 0.0, 1.5, 0.0};
    CHECK(waveform_value(w, 0.0) == 4.5);
    CHECK(waveform_value(w, 12.7) == 4.5);
  }

  SECTION("ramp sweeps from -A to +A each period") {
    const Waveform w{Waveform::Kind::ramp, 5.0, 1000.0, 0.0, 0.0};
    CHECK_THAT(waveform_value(w, 0.0), WithinAbs(-5.0, 1e-12));
    CHECK_THAT(waveform_value(w, 0.25e-3), WithinAbs(-2.5, 1e-9));
    CHECK_THAT(waveform_value(w, 0.5e-3), WithinAbs(0.0, 1e-9));
    CHECK_THAT(waveform_value(w, 0.999e-3), WithinAbs(4.99, 1e-9));
    // Periodic.
    CHECK_THAT(waveform_value(w, 1.25e-3), WithinAbs(-2.5, 1e-9));
  }

  SECTION("square alternates +/- A with zero mean") {
    const Waveform w{Waveform::Kind::square, 16.0, 1000.0, 0.0, 0.0};
    CHECK(waveform_value(w, 0.1e-3) == 16.0);
    CHECK(waveform_value(w, 0.6e-3) == -16.0);
    double sum = 0.0;
    for (int i = 0; i < 1000; ++i) {
      sum += waveform_value(w, i * 1e-6);
    }
    CHECK_THAT(sum / 1000.0, WithinAbs(0.0, 1e-9));
  }

  SECTION("sine with phase offset") {
    const Waveform w{Waveform::Kind::sine, 2.0, 50.0, 1.0, kPi / 2};
    CHECK_THAT(waveform_value(w, 0.0), WithinAbs(3.0, 1e-12));
    CHECK_THAT(waveform_value(w, 0.01), WithinAbs(-1.0, 1e-9));
  }

  SECTION("phase shifts periodic waveforms by a fraction of a period") {
    const Waveform base{Waveform::Kind::ramp, 1.0, 100.0, 0.0, 0.0};
    const Waveform shifted{Waveform::Kind::ramp, 1.0, 100.0, 0.0, kPi};
    CHECK_THAT(waveform_value(shifted, 0.0),
               WithinAbs(waveform_value(base, 0.005), 1e-12));
  }

  SECTION("validation") {
    CHECK_THROWS_AS(
        validate_waveform({Waveform::Kind::ramp, 1.0, 0.0, 0.0, 0.0}, "lo1"),
        std::invalid_argument);
    CHECK_THROWS_AS(
        validate_waveform({Waveform::Kind::square, 1.0, 50.0, 0.3, 0.0},
                          "dc1"),
        std::invalid_argument);
    CHECK_NOTHROW(
        validate_waveform({Waveform::Kind::constant, 1.0, 0.0, 0.0, 0.0},
                          "lo2"));
    CHECK(waveform_kind_from_name("ramp") == Waveform::Kind::ramp);
    CHECK_THROWS_AS(waveform_kind_from_name("triangle"),
                    std::invalid_argument);
  }
}

TEST_CASE("chopper gating is timed from the trace start") {
  const ChopperSpec chopper{4e-3, 0.5};
  CHECK(chopper.blocked_at(0.0));
  CHECK(chopper.blocked_at(1.9e-3));
  CHECK_FALSE(chopper.blocked_at(2.1e-3));
  CHECK_FALSE(chopper.blocked_at(3.9e-3));
  CHECK(chopper.blocked_at(4.1e-3));

  const ChopperSpec open{0.0, 0.0};
  CHECK_FALSE(open.blocked_at(0.0));
}

TEST_CASE("windowed variance statistics") {
  SECTION("alternating samples show the unbiased correction") {
    TimeTrace trace{2e-8, {}};
    trace.samples.resize(200);
    for (std::size_t i = 0; i < trace.samples.size(); ++i) {
      trace.samples[i] = (i % 2 == 0) ? 1.0 : -1.0;
    }
    const VarianceTrace vt = windowed_variance({trace}, 200 * 2e-8);
    REQUIRE(vt.size() == 1);
    CHECK_THAT(vt.variance[0], WithinRel(200.0 / 199.0, 1e-12));
    CHECK_THAT(vt.time_s[0], WithinRel(100 * 2e-8, 1e-12));
  }

  SECTION("white noise converges to unit variance") {
    GaussianSampler rng(5);
    TimeTrace trace{2e-8, {}};
    trace.samples.resize(200000);
    for (double& s : trace.samples) {
      s = rng.normal();
    }
    const VarianceTrace vt = windowed_variance({trace}, 4e-6);
    REQUIRE(vt.size() == 1000);
    double mean = 0.0;
    for (double v : vt.variance) mean += v;
    mean /= static_cast<double>(vt.size());
    // Pooled 5-sigma gate: each window has relative width sqrt(2/(w-1)).
    const double tol =
        5.0 * std::sqrt(2.0 / 199.0) / std::sqrt(static_cast<double>(vt.size()));
    CHECK_THAT(mean, WithinAbs(1.0, tol));
  }

  SECTION("across-trace scatter sets the standard error") {
    GaussianSampler rng(17);
    std::vector<TimeTrace> traces;
    for (int j = 0; j < 40; ++j) {
      TimeTrace trace{2e-8, {}};
      trace.samples.resize(2000);
      for (double& s : trace.samples) {
        s = rng.normal();
      }
      traces.push_back(std::move(trace));
    }
    const VarianceTrace vt = windowed_variance(traces, 4e-6);
    REQUIRE(vt.size() == 10);
    CHECK(vt.n_traces == 40);
    // Expected SE of the mean window variance: sqrt(2/(w-1)) / sqrt(m).
    const double predicted = std::sqrt(2.0 / 199.0) / std::sqrt(40.0);
    for (std::size_t k = 0; k < vt.size(); ++k) {
      CHECK(vt.se[k] > 0.4 * predicted);
      CHECK(vt.se[k] < 2.5 * predicted);
    }
  }

  SECTION("input validation") {
    CHECK_THROWS_AS(windowed_variance({}, 4e-6), std::invalid_argument);
    TimeTrace a{2e-8, {1.0, 2.0, 3.0, 4.0}};
    TimeTrace b{1e-8, {1.0, 2.0, 3.0, 4.0}};
    CHECK_THROWS_AS(windowed_variance({a, b}, 4e-8), std::invalid_argument);
    CHECK_THROWS_AS(windowed_variance({a}, 2e-8), std::invalid_argument);
    CHECK_THROWS_AS(windowed_variance({a}, 1.0), std::invalid_argument);
  }
}

TEST_CASE("postprocess selection avoids modulation edges") {
  // 2 ms of data, 4 us windows, 1 kHz square modulation, keep 0.4 ms centred
  // in each 0.5 ms half-period.
  GaussianSampler rng(3);
  TimeTrace trace{2e-8, {}};
  trace.samples.resize(100000);
  for (double& s : trace.samples) {
    s = rng.normal();
  }
  const VarianceTrace vt = windowed_variance({trace}, 4e-6);
  const VarianceTrace kept = postprocess_select(vt, 1e-3, 0.4e-3);

  CHECK(kept.size() > 0);
  CHECK(kept.size() < vt.size());
  // Four half-periods, just under 100 windows each.
  CHECK(kept.size() >= 4 * 90);
  CHECK(kept.size() <= 4 * 100);
  for (std::size_t k = 0; k < kept.size(); ++k) {
    // No kept window may touch the excluded band around any half-period edge.
    const double begin = kept.time_s[k] - 0.5 * kept.window_s;
    const double end = kept.time_s[k] + 0.5 * kept.window_s;
    const double half = 0.5e-3;
    const double edge_before = std::floor(begin / half) * half;
    CHECK(begin - edge_before >= 0.05e-3 - 1e-9);
    CHECK((edge_before + half) - end >= 0.05e-3 - 1e-9);
  }

  CHECK_THROWS_AS(postprocess_select(vt, 0.0, 0.4e-3), std::invalid_argument);
  CHECK_THROWS_AS(postprocess_select(VarianceTrace{}, 1e-3, 0.4e-3),
                  std::invalid_argument);
}

TEST_CASE("shot-noise calibration protocol") {
  const ChipNetlist chip = sqz::testing::reference_chip();

  DriveSchedule schedule;
  schedule.pump_power_mw = {154.0, 0.0};
  schedule.chopper = {4e-3, 0.5};
  AcquisitionConfig acq{50e6, 4e-3, 1, 4e-6, 0.0};

  const ExperimentRecord record = run_experiment(chip, schedule, acq, 7);
  const TimeTrace blocked =
      extract_blocked(record.detectors[0], schedule.chopper);
  // First half of the 4 ms trace.
  REQUIRE(blocked.samples.size() == 100000);

  const ShotNoiseCalibration cal = calibrate_shot_noise(blocked);
  CHECK(cal.n_windows == 5);
  // Five 0.4 ms windows of 20000 samples each: relative width
  // sqrt(2/19999)/sqrt(5) per the chi-squared law.
  const double tol = 5.0 * std::sqrt(2.0 / 19999.0) / std::sqrt(5.0);
  CHECK_THAT(cal.level, WithinAbs(1.0, tol));
  // The dB uncertainty of the level is about 0.019 dB for these window sizes.
  CHECK(cal.se_db > 0.005);
  CHECK(cal.se_db < 0.05);

  SECTION("detector gain rescales the level but not its dB uncertainty") {
    TimeTrace scaled = blocked;
    for (double& s : scaled.samples) {
      s *= 3.0;
    }
    const ShotNoiseCalibration cal2 = calibrate_shot_noise(scaled);
    CHECK_THAT(cal2.level, WithinRel(9.0 * cal.level, 1e-12));
    CHECK_THAT(cal2.se_db, WithinRel(cal.se_db, 1e-9));
    // dB readings referenced to the calibration are gain-independent.
    CHECK_THAT(to_db(9.0 * 0.7269, cal2), WithinAbs(to_db(0.7269, cal), 1e-9));
  }

  SECTION("insufficient blocked data is rejected") {
    TimeTrace small{2e-8, std::vector<double>(1000, 0.0)};
    CHECK_THROWS_AS(calibrate_shot_noise(small), std::invalid_argument);
  }

  SECTION("uncertainty combination in dB") {
    const double combined = combine_db_uncertainty(0.04, cal);
    CHECK(combined >= 0.04);
    CHECK_THAT(combined,
               WithinRel(std::hypot(0.04, cal.se_db), 1e-12));
  }
}

TEST_CASE("experiment runs are deterministic in the seed") {
  const ChipNetlist chip = sqz::testing::reference_chip();
  DriveSchedule schedule;
  schedule.pump_power_mw = {50.0, 50.0};
  schedule.electrodes["dc1"] = {Waveform::Kind::square, 16.0, 1000.0, 0.0,
                                0.0};
  AcquisitionConfig acq{50e6, 0.2e-3, 2, 4e-6, 0.0};

  const ExperimentRecord a = run_experiment(chip, schedule, acq, 99);
  const ExperimentRecord b = run_experiment(chip, schedule, acq, 99);
  const ExperimentRecord c = run_experiment(chip, schedule, acq, 100);

  REQUIRE(a.detectors[0].size() == 2);
  bool identical = true;
  bool differs = false;
  for (int d = 0; d < 2; ++d) {
    for (std::size_t j = 0; j < a.detectors[d].size(); ++j) {
      identical = identical &&
                  a.detectors[d][j].samples == b.detectors[d][j].samples;
      differs = differs ||
                a.detectors[d][j].samples != c.detectors[d][j].samples;
    }
  }
  CHECK(identical);
  CHECK(differs);
}

TEST_CASE("blocked pumps leave shot noise only") {
  const ChipNetlist chip = sqz::testing::reference_chip();
  DriveSchedule schedule;
  schedule.pump_power_mw = {154.0, 154.0};
  // Chopper period longer than the trace: the gate never opens.
  schedule.chopper = {8e-3, 0.5};
  AcquisitionConfig acq{50e6, 2e-3, 1, 4e-6, 0.0};

  const ExperimentRecord record = run_experiment(chip, schedule, acq, 21);
  for (int d = 0; d < 2; ++d) {
    const VarianceTrace vt = windowed_variance(record.detectors[d], 4e-6);
    double mean = 0.0;
    for (double v : vt.variance) mean += v;
    mean /= static_cast<double>(vt.size());
    const double se =
        std::sqrt(2.0 / 199.0) / std::sqrt(static_cast<double>(vt.size()));
    CHECK(std::abs(10.0 * std::log10(mean)) <
          3.0 * 10.0 / std::log(10.0) * se);
  }
}

TEST_CASE("static squeezed drive reproduces the analytic noise level") {
  const ChipNetlist chip = sqz::testing::reference_chip();
  DriveSchedule schedule;
  schedule.pump_power_mw = {154.0, 0.0};
  schedule.electrodes["dc1"] = {Waveform::Kind::square, 16.0, 1000.0, 0.0,
                                0.0};
  schedule.electrodes["lo1"] = {Waveform::Kind::constant, 0.0, 0.0, 0.0, 0.0};
  AcquisitionConfig acq{50e6, 2e-3, 4, 4e-6, 0.4e-3};

  const ExperimentRecord record = run_experiment(chip, schedule, acq, 4242);
  const VarianceTrace vt = postprocess_select(
      windowed_variance(record.detectors[0], acq.variance_window_s), 1e-3,
      acq.postprocess_window_s);

  const double r = squeezing_from_pump(chip.sources[0], 154.0);
  const double expected = 0.52 * std::exp(-2.0 * r) + 0.48;

  double mean = 0.0;
  for (double v : vt.variance) mean += v;
  mean /= static_cast<double>(vt.size());
  const double se = expected * std::sqrt(2.0 / 199.0) /
                    std::sqrt(static_cast<double>(4 * vt.size()));
  CHECK_THAT(mean, WithinAbs(expected, 5.0 * se));

  SECTION("anti-squeezed quadrature at lo1 = 5 V") {
    DriveSchedule rotated = schedule;
    rotated.electrodes["lo1"] = {Waveform::Kind::constant, 5.0, 0.0, 0.0, 0.0};
    const ExperimentRecord rec2 = run_experiment(chip, rotated, acq, 4243);
    const VarianceTrace vt2 = postprocess_select(
        windowed_variance(rec2.detectors[0], acq.variance_window_s), 1e-3,
        acq.postprocess_window_s);
    const double anti = 0.52 * std::exp(2.0 * r) + 0.48;
    double mean2 = 0.0;
    for (double v : vt2.variance) mean2 += v;
    mean2 /= static_cast<double>(vt2.size());
    const double se2 = anti * std::sqrt(2.0 / 199.0) /
                       std::sqrt(static_cast<double>(4 * vt2.size()));
    CHECK_THAT(mean2, WithinAbs(anti, 5.0 * se2));
  }
}

TEST_CASE("joint sampling carries two-mode correlations into photocurrents") {
  const ChipNetlist chip = sqz::testing::reference_chip();
  const double v_half = coupler_voltage_for_sr(chip.entangling_coupler, 0.5);

  DriveSchedule schedule;
  schedule.pump_power_mw = {122.0, 122.0};
  schedule.pump_phase_rad = {0.0, kPi};
  schedule.electrodes["dc1"] = {Waveform::Kind::constant, v_half, 0.0, 0.0,
                                0.0};
  AcquisitionConfig acq{50e6, 4e-3, 1, 4e-6, 0.0};

  // Analytic expectation from the same drive point.
  ControlSetting setting;
  setting.voltages = {{"dc1", v_half}};
  setting.pump_power_mw = {122.0, 122.0};
  setting.pump_phase_rad = {0.0, kPi};
  const GaussianState state = detected_state(build_circuit(chip, setting));
  const double expected =
      joint_quadrature_variance(state, 0, 1, 0.0, 0.0, CombineSign::minus);
  REQUIRE(expected < 1.0);

  const ExperimentRecord record = run_experiment(chip, schedule, acq, 31);
  const std::vector<double>& i1 = record.detectors[0][0].samples;
  const std::vector<double>& i2 = record.detectors[1][0].samples;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < i1.size(); ++i) {
    const double d = (i1[i] - i2[i]) / std::sqrt(2.0);
    sum_sq += d * d;
  }
  const double variance = sum_sq / static_cast<double>(i1.size());
  const double se =
      expected * std::sqrt(2.0 / static_cast<double>(i1.size()));
  CHECK_THAT(variance, WithinAbs(expected, 5.0 * se));
}

TEST_CASE("experiment validation") {
  const ChipNetlist chip = sqz::testing::reference_chip();
  DriveSchedule schedule;
  AcquisitionConfig acq{50e6, 1e-4, 1, 4e-6, 0.0};

  SECTION("unknown electrode") {
    DriveSchedule bad = schedule;
    bad.electrodes["dc7"] = {Waveform::Kind::constant, 1.0, 0.0, 0.0, 0.0};
    CHECK_THROWS_AS(run_experiment(chip, bad, acq, 1), std::invalid_argument);
  }

  SECTION("local-oscillator drive outside the shifter range") {
    DriveSchedule bad = schedule;
    bad.electrodes["lo1"] = {Waveform::Kind::constant, 60.0, 0.0, 0.0, 0.0};
    CHECK_THROWS_AS(run_experiment(chip, bad, acq, 1), std::invalid_argument);
  }

  SECTION("coupler drive outside its range") {
    DriveSchedule bad = schedule;
    bad.electrodes["dc1"] = {Waveform::Kind::constant, 25.0, 0.0, 0.0, 0.0};
    CHECK_THROWS_AS(run_experiment(chip, bad, acq, 1), std::invalid_argument);
  }

  SECTION("negative pump power") {
    DriveSchedule bad = schedule;
    bad.pump_power_mw = {-1.0, 0.0};
    CHECK_THROWS_AS(run_experiment(chip, bad, acq, 1), std::invalid_argument);
  }

  SECTION("bad acquisition geometry") {
    CHECK_THROWS_AS(
        run_experiment(chip, schedule,
                       AcquisitionConfig{0.0, 1e-3, 1, 4e-6, 0.0}, 1),
        std::invalid_argument);
    CHECK_THROWS_AS(
        run_experiment(chip, schedule,
                       AcquisitionConfig{50e6, 1e-3, 0, 4e-6, 0.0}, 1),
        std::invalid_argument);
    CHECK_THROWS_AS(
        run_experiment(chip, schedule,
                       AcquisitionConfig{50e6, 1e-3, 1, 1e-8, 0.0}, 1),
        std::invalid_argument);
  }

  SECTION("chopper validation") {
    DriveSchedule bad = schedule;
    bad.chopper = {0.0, 0.5};
    CHECK_THROWS_AS(run_experiment(chip, bad, acq, 1), std::invalid_argument);
    bad.chopper = {4e-3, 1.0};
    CHECK_THROWS_AS(run_experiment(chip, bad, acq, 1), std::invalid_argument);
  }
}

}  // namespace
