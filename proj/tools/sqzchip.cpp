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

// sqzchip — simulate and analyse the squeezed-light chip experiments.
//
//   sqzchip shg-sweep     --out DIR [--config PATH] [--lambda-min NM]
//                         [--lambda-max NM] [--points N]
//   sqzchip squeeze-sweep --out DIR [--config PATH] [--seed N]
//                         [--powers P1,P2,...]
//   sqzchip entangle-run  --out DIR [--config PATH] [--seed N]
//                         [--pump1-mw P] [--pump2-mw P]
//   sqzchip fit           --input CSV --model scan|power|shg --out DIR
//                         [--scan-rate RAD_PER_S]
//
// Success prints a one-line summary on stdout and exits 0.  Any failure
// writes a machine-readable JSON object on stderr and exits 1.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sqz/commands.hpp"

namespace {

struct CliOptions {
  std::string config_path;
  std::string out_dir;
  std::string input_csv;
  std::string model;
  std::uint64_t seed = 1;
  double lambda_min_nm = 0.0;
  double lambda_max_nm = 0.0;
  int n_points = 0;
  std::vector<double> powers_mw;
  double pump1_mw = -1.0;
  double pump2_mw = -1.0;
  double scan_rate = 0.0;
};

sqz::CommandContext make_context(const CliOptions& opt) {
  sqz::CommandContext ctx;
  if (opt.config_path.empty()) {
    ctx.config = sqz::reference_config();
    ctx.config_label = "<built-in>";
  } else {
    ctx.config = sqz::load_config(opt.config_path);
    ctx.config_label = opt.config_path;
  }
  ctx.out_dir = opt.out_dir;
  ctx.seed = opt.seed;
  return ctx;
}

void report_success(const sqz::RunManifest& manifest) {
  std::cout << manifest.experiment << ": wrote "
            << manifest.file_checksums.size() + 1 << " files to "
            << manifest.output_dir << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Squeezed-light photonic chip simulator"};
  app.require_subcommand(1);
  CliOptions opt;

  const auto add_common = [&opt](CLI::App* cmd, bool with_seed) {
    cmd->add_option("--config", opt.config_path,
                    "Configuration JSON (defaults to the built-in device)");
    cmd->add_option("--out", opt.out_dir, "Output directory")->required();
    if (with_seed) {
      cmd->add_option("--seed", opt.seed, "Master random seed");
    }
  };

  CLI::App* shg = app.add_subcommand(
      "shg-sweep", "Second-harmonic tuning curves of both waveguides");
  add_common(shg, false);
  shg->add_option("--lambda-min", opt.lambda_min_nm,
                  "Sweep start wavelength [nm]");
  shg->add_option("--lambda-max", opt.lambda_max_nm,
                  "Sweep end wavelength [nm]");
  shg->add_option("--points", opt.n_points, "Number of wavelength points");

  CLI::App* squeeze = app.add_subcommand(
      "squeeze-sweep", "Squeezing versus pump power on both arms");
  add_common(squeeze, true);
  squeeze
      ->add_option("--powers", opt.powers_mw,
                   "Pump powers [mW], comma separated")
      ->delimiter(',');

  CLI::App* entangle = app.add_subcommand(
      "entangle-run", "Two-mode entanglement runs and inseparability report");
  add_common(entangle, true);
  entangle->add_option("--pump1-mw", opt.pump1_mw, "Pump power, waveguide 1");
  entangle->add_option("--pump2-mw", opt.pump2_mw, "Pump power, waveguide 2");

  CLI::App* fit = app.add_subcommand(
      "fit", "Fit a CSV in one of the emitted schemas (scan, power, shg)");
  fit->add_option("--input", opt.input_csv, "Input CSV file")->required();
  fit->add_option("--model", opt.model, "Fit model")
      ->required()
      ->check(CLI::IsMember({"scan", "power", "shg"}));
  fit->add_option("--out", opt.out_dir, "Output directory")->required();
  fit->add_option("--scan-rate", opt.scan_rate,
                  "Scan-rate hint [rad/s], required by the scan model");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& error) {
    return app.exit(error);  // also handles --help
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (shg->parsed()) {
      sqz::CommandContext ctx = make_context(opt);
      if (shg->count("--lambda-min")) {
        ctx.config.shg.lambda_min_nm = opt.lambda_min_nm;
      }
      if (shg->count("--lambda-max")) {
        ctx.config.shg.lambda_max_nm = opt.lambda_max_nm;
      }
      if (shg->count("--points")) {
        ctx.config.shg.n_points = opt.n_points;
      }
      report_success(sqz::cmd_shg_sweep(ctx));
    } else if (squeeze->parsed()) {
      sqz::CommandContext ctx = make_context(opt);
      if (squeeze->count("--powers")) {
        ctx.config.squeeze.powers_mw = opt.powers_mw;
      }
      report_success(sqz::cmd_squeeze_sweep(ctx));
    } else if (entangle->parsed()) {
      sqz::CommandContext ctx = make_context(opt);
      if (entangle->count("--pump1-mw")) {
        ctx.config.entangle.pump_power_mw[0] = opt.pump1_mw;
      }
      if (entangle->count("--pump2-mw")) {
        ctx.config.entangle.pump_power_mw[1] = opt.pump2_mw;
      }
      report_success(sqz::cmd_entangle_run(ctx));
    } else {
      report_success(
          sqz::cmd_fit(opt.input_csv, opt.model, opt.out_dir, opt.scan_rate));
    }
  } catch (const sqz::CsvError& error) {
    std::cerr << nlohmann::json{{"command", command},
                                {"error", error.what()},
                                {"row", error.row()},
                                {"column", error.column()}}
                     .dump()
              << '\n';
    return 1;
  } catch (const std::exception& error) {
    std::cerr << nlohmann::json{{"command", command}, {"error", error.what()}}
                     .dump()
              << '\n';
    return 1;
  }
  return 0;
}
