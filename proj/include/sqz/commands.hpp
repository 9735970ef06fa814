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

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "sqz/config.hpp"
#include "sqz/csv.hpp"
#include "sqz/manifest.hpp"

// Experiment commands.  Each command simulates (or, for `cmd_fit`, analyses)
// one run and writes a flat output directory: data as CSV, reports as JSON,
// plus a manifest with a checksum per emitted file.  A command invoked with
// the same configuration and seed reproduces every file byte for byte.
//
// Every CSV written here uses one of the three fit input schemas, so any
// emitted file can be fed back through `cmd_fit`:
//   scan  — time_s, variance, se (+ informational variance_db, se_db)
//   power — power_mw, v_minus, v_plus
//   shg   — lambda_nm, efficiency_pct_per_w

namespace sqz {

struct CommandContext {
  ExperimentConfig config;
  std::string config_label;  // path of the loaded file, or "<built-in>"
  std::filesystem::path out_dir;
  std::uint64_t seed = 1;
};

// ---------------------------------------------------------------------------
// Result serialisation shared by the sweep commands and cmd_fit
// ---------------------------------------------------------------------------

inline nlohmann::json scan_fit_to_json(const VarianceScanFit& f) {
  return {{"v_plus", f.v_plus},
          {"v_minus", f.v_minus},
          {"scan_rate_rad_per_s", f.scan_rate},
          {"phase_rad", f.phase},
          {"se_v_plus", f.se_v_plus},
          {"se_v_minus", f.se_v_minus},
          {"se_scan_rate", f.se_scan_rate},
          {"se_phase", f.se_phase},
          {"rss", f.rss},
          {"n_points", f.n_points},
          {"iterations", f.iterations},
          {"converged", f.converged},
          {"phase_identifiable", f.phase_identifiable}};
}

inline nlohmann::json power_fit_to_json(const PowerSweepFit& f) {
  return {{"mu_per_sqrt_mw", f.mu},
          {"eta", f.eta},
          {"se_mu", f.se_mu},
          {"se_eta", f.se_eta},
          {"ci95_mu", f.ci95_mu},
          {"ci95_eta", f.ci95_eta},
          {"rss", f.rss},
          {"degrees_of_freedom", f.degrees_of_freedom},
          {"iterations", f.iterations},
          {"converged", f.converged}};
}

inline nlohmann::json shg_fit_to_json(const ShgFit& f) {
  return {{"peak_pct_per_w", f.peak_pct_per_w},
          {"center_nm", f.center_nm},
          {"fwhm_nm", f.fwhm_nm},
          {"se_peak", f.se_peak},
          {"se_center", f.se_center},
          {"se_fwhm", f.se_fwhm},
          {"inferred_length_cm", f.inferred_length_cm},
          {"rss", f.rss},
          {"iterations", f.iterations},
          {"converged", f.converged}};
}

inline nlohmann::json shot_noise_to_json(const ShotNoiseCalibration& c) {
  return {{"level", c.level}, {"se_db", c.se_db}, {"n_windows", c.n_windows}};
}

inline nlohmann::json branch_to_json(const BranchMeasurement& b) {
  return {{"variance", b.value},
          {"se", b.se},
          {"variance_db", 10.0 * std::log10(b.value)},
          {"combination", b.sign == CombineSign::plus ? "sum" : "difference"},
          {"time_s", b.time_s},
          {"offset_rad", b.offset_rad},
          {"sign_ambiguous", b.sign_ambiguous}};
}

inline nlohmann::json arm_scan_to_json(const ArmScanResult& arm) {
  return {{"shot_noise", shot_noise_to_json(arm.shot_noise)},
          {"fit", scan_fit_to_json(arm.fit)},
          {"squeezing_db", arm.squeezing_db},
          {"anti_squeezing_db", arm.anti_squeezing_db},
          {"se_squeezing_db", arm.se_squeezing_db},
          {"se_anti_squeezing_db", arm.se_anti_squeezing_db}};
}

// ---------------------------------------------------------------------------
// CSV builders
// ---------------------------------------------------------------------------

// Scan schema; the dB columns are informational and ignored by cmd_fit.
inline CsvTable variance_trace_table(const VarianceTrace& trace) {
  CsvTable table;
  table.columns = {"time_s", "variance", "se", "variance_db", "se_db"};
  table.rows.reserve(trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const double v = trace.variance[i];
    table.rows.push_back({trace.time_s[i], v, trace.se[i],
                          10.0 * std::log10(v),
                          variance_se_to_db(v, trace.se[i])});
  }
  return table;
}

inline CsvTable power_sweep_table(const std::vector<PowerSweepPoint>& points) {
  CsvTable table;
  table.columns = {"power_mw", "v_minus", "v_plus"};
  table.rows.reserve(points.size());
  for (const PowerSweepPoint& pt : points) {
    table.rows.push_back({pt.power_mw, pt.v_minus, pt.v_plus});
  }
  return table;
}

inline CsvTable shg_curve_table(const std::vector<ShgPoint>& curve) {
  CsvTable table;
  table.columns = {"lambda_nm", "efficiency_pct_per_w"};
  table.rows.reserve(curve.size());
  for (const ShgPoint& pt : curve) {
    table.rows.push_back({pt.lambda_nm, pt.efficiency_pct_per_w});
  }
  return table;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

inline RunManifest cmd_shg_sweep(const CommandContext& ctx) {
  const ShgSweepResult result = run_shg_sweep(ctx.config.chip, ctx.config.shg);
  RunWriter writer(ctx.out_dir, "shg_sweep", ctx.config_label, ctx.seed);
  nlohmann::json fits = nlohmann::json::array();
  for (int arm = 0; arm < 2; ++arm) {
    writer.add_file("shg_curve_wg" + std::to_string(arm + 1) + ".csv",
                    serialise_csv(shg_curve_table(result.arms[arm].curve)));
    fits.push_back(shg_fit_to_json(result.arms[arm].fit));
  }
  writer.add_json("shg_fit.json", {{"arms", fits}});
  return writer.finish();
}

inline RunManifest cmd_squeeze_sweep(const CommandContext& ctx) {
  const SqueezeSweepResult result =
      run_squeeze_sweep(ctx.config.chip, ctx.config.squeeze, ctx.seed);
  RunWriter writer(ctx.out_dir, "squeeze_sweep", ctx.config_label, ctx.seed);

  nlohmann::json per_power = nlohmann::json::array();
  for (std::size_t i = 0; i < result.per_power.size(); ++i) {
    const SqueezePowerResult& pr = result.per_power[i];
    nlohmann::json arms = nlohmann::json::array();
    for (int arm = 0; arm < 2; ++arm) {
      char name[48];
      std::snprintf(name, sizeof name, "scan_p%02zu_hd%d.csv", i, arm + 1);
      writer.add_file(name,
                      serialise_csv(variance_trace_table(pr.arms[arm].scan)));
      arms.push_back(arm_scan_to_json(pr.arms[arm]));
    }
    per_power.push_back(
        {{"power_mw", pr.power_mw}, {"seed", pr.seed}, {"arms", arms}});
  }

  nlohmann::json power_fits = nlohmann::json::array();
  for (int arm = 0; arm < 2; ++arm) {
    const PowerFitOutcome& outcome = result.power_fit[arm];
    nlohmann::json entry = {{"valid", outcome.valid}};
    if (outcome.valid) {
      entry["fit"] = power_fit_to_json(outcome.fit);
      // The fitted points double as the power-sweep CSV (fit input schema).
      std::vector<PowerSweepPoint> points;
      for (const SqueezePowerResult& pr : result.per_power) {
        if (pr.power_mw > 0.0) {
          points.push_back({pr.power_mw, pr.arms[arm].fit.v_minus,
                            pr.arms[arm].fit.v_plus});
        }
      }
      writer.add_file("power_sweep_hd" + std::to_string(arm + 1) + ".csv",
                      serialise_csv(power_sweep_table(points)));
    } else {
      entry["note"] = outcome.note;
    }
    power_fits.push_back(entry);
  }

  writer.add_json("squeeze_report.json", {{"seed", ctx.seed},
                                          {"per_power", per_power},
                                          {"power_fit", power_fits}});
  return writer.finish();
}

inline RunManifest cmd_entangle_run(const CommandContext& ctx) {
  const EntangleRunResult result =
      run_entangle(ctx.config.chip, ctx.config.entangle, ctx.seed);
  RunWriter writer(ctx.out_dir, "entangle_run", ctx.config_label, ctx.seed);

  for (int arm = 0; arm < 2; ++arm) {
    const std::string hd = "_hd" + std::to_string(arm + 1) + ".csv";
    writer.add_file(
        "in_phase" + hd,
        serialise_csv(variance_trace_table(result.in_phase.arm_scan[arm])));
    writer.add_file("out_of_phase" + hd,
                    serialise_csv(variance_trace_table(
                        result.out_of_phase.arm_scan[arm])));
  }
  writer.add_file(
      "combined_sum.csv",
      serialise_csv(variance_trace_table(result.out_of_phase.combined_sum)));
  writer.add_file(
      "combined_diff.csv",
      serialise_csv(variance_trace_table(result.out_of_phase.combined_diff)));

  const auto case_json = [](const EntangleCaseResult& c) {
    return nlohmann::json{
        {"trigger_offset_s", c.trigger_offset_s},
        {"seed", c.seed},
        {"shot_noise",
         {shot_noise_to_json(c.shot_noise[0]),
          shot_noise_to_json(c.shot_noise[1])}}};
  };
  nlohmann::json report;
  report["seed"] = ctx.seed;
  report["in_phase"] = case_json(result.in_phase);
  report["in_phase"]["arms"] = {arm_scan_to_json(result.in_phase_arms[0]),
                                arm_scan_to_json(result.in_phase_arms[1])};
  report["out_of_phase"] = case_json(result.out_of_phase);
  report["out_of_phase"]["arm_levels"] = nlohmann::json::array();
  for (int arm = 0; arm < 2; ++arm) {
    report["out_of_phase"]["arm_levels"].push_back(
        {{"variance", result.out_arm_level[arm].variance},
         {"se", result.out_arm_level[arm].se},
         {"variance_db", result.out_arm_level_db[arm]},
         {"se_db", result.out_arm_level_se_db[arm]}});
  }
  report["quadrature_frame"] = {
      {"scan_rate_rad_per_s", result.scan_rate_rad_per_s},
      {"phase_rad", result.scan_phase_rad},
      {"from_fit", result.frame_from_fit}};
  report["branches"] = {{"plus", branch_to_json(result.report.plus_branch)},
                        {"minus", branch_to_json(result.report.minus_branch)}};
  report["inseparability"] = {{"value", result.report.value},
                              {"se", result.report.se}};
  writer.add_json("entangle_report.json", report);
  return writer.finish();
}

// ---------------------------------------------------------------------------
// Offline fitting of a CSV in one of the three emitted schemas
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<double> csv_column(const CsvTable& table, int index) {
  std::vector<double> out;
  out.reserve(table.rows.size());
  for (const std::vector<double>& row : table.rows) {
    out.push_back(row[static_cast<std::size_t>(index)]);
  }
  return out;
}

}  // namespace detail

// Fits `table` with the given model and returns the report document that
// `cmd_fit` writes.  `scan_rate_hint_rad_per_s` is required by the scan
// model and ignored by the others.
inline nlohmann::json fit_csv_table(const CsvTable& table,
                                    const std::string& model,
                                    double scan_rate_hint_rad_per_s = 0.0) {
  nlohmann::json report;
  report["model"] = model;
  if (model == "scan") {
    if (!(scan_rate_hint_rad_per_s != 0.0)) {
      throw std::invalid_argument(
          "fit_csv_table: the scan model needs a non-zero scan-rate hint");
    }
    VarianceTrace trace;
    trace.time_s = detail::csv_column(table, table.require_column("time_s"));
    trace.variance =
        detail::csv_column(table, table.require_column("variance"));
    trace.se = detail::csv_column(table, table.require_column("se"));
    report["scan_rate_hint_rad_per_s"] = scan_rate_hint_rad_per_s;
    report["fit"] = scan_fit_to_json(
        fit_variance_scan(trace, scan_rate_hint_rad_per_s));
  } else if (model == "power") {
    std::vector<PowerSweepPoint> points(table.rows.size());
    const std::vector<double> power =
        detail::csv_column(table, table.require_column("power_mw"));
    const std::vector<double> v_minus =
        detail::csv_column(table, table.require_column("v_minus"));
    const std::vector<double> v_plus =
        detail::csv_column(table, table.require_column("v_plus"));
    for (std::size_t i = 0; i < points.size(); ++i) {
      points[i] = {power[i], v_minus[i], v_plus[i]};
    }
    report["fit"] = power_fit_to_json(fit_power_sweep(points));
  } else if (model == "shg") {
    std::vector<ShgPoint> points(table.rows.size());
    const std::vector<double> lambda =
        detail::csv_column(table, table.require_column("lambda_nm"));
    const std::vector<double> eff = detail::csv_column(
        table, table.require_column("efficiency_pct_per_w"));
    for (std::size_t i = 0; i < points.size(); ++i) {
      points[i] = {lambda[i], eff[i]};
    }
    report["fit"] = shg_fit_to_json(fit_shg_curve(points));
  } else {
    throw std::invalid_argument("fit_csv_table: unknown model '" + model +
                                "' (expected scan, power, or shg)");
  }
  return report;
}

inline RunManifest cmd_fit(const std::filesystem::path& input_csv,
                           const std::string& model,
                           const std::filesystem::path& out_dir,
                           double scan_rate_hint_rad_per_s = 0.0) {
  const CsvTable table = read_csv(input_csv);
  nlohmann::json report =
      fit_csv_table(table, model, scan_rate_hint_rad_per_s);
  report["input"] = input_csv.string();
  RunWriter writer(out_dir, "fit", input_csv.string(), 0);
  writer.add_json("fit.json", report);
  return writer.finish();
}

}  // namespace sqz
