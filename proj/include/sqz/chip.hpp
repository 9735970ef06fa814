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
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "sqz/gaussian.hpp"

namespace sqz {

// ---------------------------------------------------------------------------
// Device specs
//
// The modelled chip hosts two periodically poled squeezer waveguides whose
// outputs pass, per arm: pump-filter coupler -> tunable entangling coupler ->
// output facet -> balanced homodyne detector.  Arm k is simulated as mode k.
// ---------------------------------------------------------------------------

// Squeezer waveguide.  The squeezing parameter scales with the square root of
// the pump power: r = squeezing_per_sqrt_mw * sqrt(P[mW]).  The wavelength
// acceptance of the underlying second-harmonic process follows a sinc^2
// tuning curve centred on the phase-matching wavelength.
struct PPWaveguideSpec {
  double squeezing_per_sqrt_mw = 0.0;
  double phase_match_wavelength_nm = 0.0;
  double shg_fwhm_nm = 0.0;
  double peak_conversion_pct_per_w = 0.0;  // normalised SHG efficiency, %/W
};

// Electro-optically tunable directional coupler, modelled with coupled-mode
// theory: applying a voltage detunes the propagation constants of the two
// guides, which pushes the splitting ratio down from its zero-volt value.
//
//   sr(v) = kappa^2 / (kappa^2 + d(v)^2) * sin^2( sqrt(kappa^2 + d(v)^2) )
//
// with kappa = kappa_l (coupling x length, radians) and d(v) =
// detune_per_volt * v.  The response is even in v.
struct TunableCouplerSpec {
  double sr_at_zero = 0.0;      // splitting ratio at 0 V
  double kappa_l = 0.0;         // rad, fixed by sr_at_zero during calibration
  double detune_per_volt = 0.0; // rad/V, fixed by the calibration point
  double voltage_range_v = 0.0; // drive must satisfy |v| <= range
  double min_sr = 0.0;          // splitting ratio at the calibration voltage
  double calibration_voltage_v = 0.0;  // where min_sr was measured
};

// Thermo/electro-optic phase shifter in the local-oscillator path.
struct PhaseShifterSpec {
  double v_pi = 0.0;            // volts per pi of optical phase
  double voltage_range_v = 0.0;
};

// Homodyne detector.  The dark-noise clearance acts as an extra efficiency
// penalty: shot noise sitting `dark_clearance_db` above the dark floor is
// equivalent to a transmissivity of 1 - 10^(-clearance/10).
struct DetectorSpec {
  double quantum_efficiency = 0.0;
  double dark_clearance_db = 0.0;

  double dark_noise_penalty() const {
    return 1.0 - std::pow(10.0, -dark_clearance_db / 10.0);
  }
  double efficiency() const {
    return quantum_efficiency * dark_noise_penalty();
  }
};

// Signal propagation path of one arm, split at the entangling coupler.  The
// split matters: loss applied before the coupler acts on the bare squeezed
// mode, loss after acts on the entangled output.
struct LossSegments {
  double before_coupler_cm = 0.0;
  double after_coupler_cm = 0.0;

  double total_cm() const { return before_coupler_cm + after_coupler_cm; }
};

struct ChipNetlist {
  std::array<PPWaveguideSpec, 2> sources;
  std::array<double, 2> pump_filter_sr;                 // DC2, DC3
  TunableCouplerSpec entangling_coupler;                // DC1
  std::array<TunableCouplerSpec, 2> homodyne_couplers;  // DC4, DC5
  std::array<PhaseShifterSpec, 2> lo_phase_shifters;    // LO1, LO2
  std::array<LossSegments, 2> signal_path;
  double signal_loss_db_per_cm = 0.0;
  double pump_loss_db_per_cm = 0.0;
  double facet_loss = 0.0;  // power fraction lost at the output facet
  DetectorSpec detector;
};

// Static drive point: electrode voltages plus pump settings per arm.
struct ControlSetting {
  std::map<std::string, double> voltages;  // electrode name -> volts
  std::array<double, 2> pump_power_mw{0.0, 0.0};
  std::array<double, 2> pump_phase_rad{0.0, 0.0};
};

// ---------------------------------------------------------------------------
// Coupler model and calibration
// ---------------------------------------------------------------------------

namespace detail {

inline double coupler_sr_from_detune(double kappa_l, double detune) {
  const double g2 = kappa_l * kappa_l + detune * detune;
  const double g = std::sqrt(g2);
  const double s = std::sin(g);
  return (kappa_l * kappa_l / g2) * s * s;
}

}  // namespace detail

inline double coupler_splitting_ratio(const TunableCouplerSpec& spec,
                                      double volts) {
  if (std::abs(volts) > spec.voltage_range_v + 1e-12) {
    throw std::invalid_argument(
        "coupler_splitting_ratio: voltage " + std::to_string(volts) +
        " V outside the +/-" + std::to_string(spec.voltage_range_v) +
        " V range");
  }
  return detail::coupler_sr_from_detune(spec.kappa_l,
                                        spec.detune_per_volt * volts);
}

// Calibrates the coupled-mode parameters from two measured points: the
// zero-volt splitting ratio and the (small) residual ratio at the edge of the
// drive range.  kappa_l follows directly from sr(0) = sin^2(kappa_l) on the
// first coupling lobe; the voltage scale is found by bisection on the first
// monotone branch, where sr decreases from sr(0) towards its first zero.
inline TunableCouplerSpec calibrate_coupler(double sr_at_zero,
                                            double edge_voltage,
                                            double sr_at_edge,
                                            double voltage_range_v) {
  if (!(sr_at_zero > 0.0 && sr_at_zero <= 1.0)) {
    throw std::invalid_argument(
        "calibrate_coupler: zero-volt splitting ratio must lie in (0, 1]");
  }
  if (!(sr_at_edge > 0.0 && sr_at_edge < sr_at_zero)) {
    throw std::invalid_argument(
        "calibrate_coupler: edge splitting ratio must lie in (0, sr_at_zero)");
  }
  if (!(edge_voltage > 0.0) || !(voltage_range_v >= edge_voltage)) {
    throw std::invalid_argument(
        "calibrate_coupler: need 0 < edge_voltage <= voltage_range");
  }
  TunableCouplerSpec spec;
  spec.sr_at_zero = sr_at_zero;
  spec.kappa_l = std::asin(std::sqrt(sr_at_zero));
  spec.voltage_range_v = voltage_range_v;
  spec.min_sr = sr_at_edge;
  spec.calibration_voltage_v = edge_voltage;

  // First transmission zero sits at sqrt(kappa_l^2 + d^2) = pi; bisect for
  // the detuning below it.
  const double d_zero = std::sqrt(kPi * kPi - spec.kappa_l * spec.kappa_l);
  double lo = 0.0, hi = d_zero;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (detail::coupler_sr_from_detune(spec.kappa_l, mid) > sr_at_edge) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  spec.detune_per_volt = 0.5 * (lo + hi) / edge_voltage;
  return spec;
}

// Positive voltage that realises `target_sr` on the first monotone branch.
inline double coupler_voltage_for_sr(const TunableCouplerSpec& spec,
                                     double target_sr) {
  if (!(target_sr > 0.0 && target_sr <= spec.sr_at_zero)) {
    throw std::invalid_argument(
        "coupler_voltage_for_sr: target must lie in (0, sr_at_zero]");
  }
  const double d_zero = std::sqrt(kPi * kPi - spec.kappa_l * spec.kappa_l);
  const double v_zero = d_zero / spec.detune_per_volt;
  double lo = 0.0, hi = std::min(v_zero, spec.voltage_range_v);
  if (coupler_splitting_ratio(spec, hi) > target_sr) {
    throw std::invalid_argument(
        "coupler_voltage_for_sr: target below the reachable minimum");
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (coupler_splitting_ratio(spec, mid) > target_sr) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Simple electrode maps
// ---------------------------------------------------------------------------

inline double phase_from_voltage(const PhaseShifterSpec& spec, double volts) {
  if (!(spec.v_pi > 0.0)) {
    throw std::invalid_argument("phase_from_voltage: v_pi must be positive");
  }
  return kPi * volts / spec.v_pi;
}

inline double squeezing_from_pump(const PPWaveguideSpec& spec,
                                  double pump_power_mw) {
  if (pump_power_mw < 0.0) {
    throw std::invalid_argument(
        "squeezing_from_pump: pump power must be non-negative");
  }
  return spec.squeezing_per_sqrt_mw * std::sqrt(pump_power_mw);
}

// ---------------------------------------------------------------------------
// Efficiency budget
// ---------------------------------------------------------------------------

// Multiplicative efficiency factors of one detection chain.
struct EfficiencyBudget {
  double propagation = 1.0;        // waveguide loss over the full signal path
  double coupler_insertion = 1.0;  // residual leak of the entangling coupler
  double pump_filter = 1.0;        // signal transmission of the pump filter
  double facet = 1.0;
  double quantum_efficiency = 1.0;
  double dark_clearance = 1.0;

  double total() const {
    return propagation * coupler_insertion * pump_filter * facet *
           quantum_efficiency * dark_clearance;
  }
};

inline EfficiencyBudget efficiency_budget(const ChipNetlist& chip, int arm) {
  if (arm < 0 || arm > 1) {
    throw std::out_of_range("efficiency_budget: arm must be 0 or 1");
  }
  EfficiencyBudget budget;
  const double length_cm = chip.signal_path[arm].total_cm();
  if (!(length_cm > 0.0)) {
    throw std::invalid_argument(
        "efficiency_budget: signal path length missing for arm " +
        std::to_string(arm + 1));
  }
  budget.propagation =
      std::pow(10.0, -0.1 * chip.signal_loss_db_per_cm * length_cm);
  budget.coupler_insertion = 1.0 - chip.entangling_coupler.min_sr;
  budget.pump_filter = chip.pump_filter_sr[arm];
  budget.facet = 1.0 - chip.facet_loss;
  budget.quantum_efficiency = chip.detector.quantum_efficiency;
  budget.dark_clearance = chip.detector.dark_noise_penalty();
  return budget;
}

// Total signal path length (cm) that makes the arm's end-to-end efficiency
// equal eta_target, holding every non-propagation factor fixed.
inline double solve_arm_length_for_efficiency(const ChipNetlist& chip, int arm,
                                              double eta_target) {
  if (arm < 0 || arm > 1) {
    throw std::out_of_range("solve_arm_length_for_efficiency: arm must be 0 or 1");
  }
  if (!(eta_target > 0.0 && eta_target < 1.0)) {
    throw std::invalid_argument(
        "solve_arm_length_for_efficiency: target must lie in (0, 1)");
  }
  const double fixed = (1.0 - chip.entangling_coupler.min_sr) *
                       chip.pump_filter_sr[arm] * (1.0 - chip.facet_loss) *
                       chip.detector.efficiency();
  if (eta_target >= fixed) {
    throw std::invalid_argument(
        "solve_arm_length_for_efficiency: target exceeds the fixed (zero-"
        "length) budget of " + std::to_string(fixed));
  }
  return -10.0 * std::log10(eta_target / fixed) / chip.signal_loss_db_per_cm;
}

// ---------------------------------------------------------------------------
// Second-harmonic tuning curve
// ---------------------------------------------------------------------------

// Abscissa where sinc^2 drops to one half: sin(x)^2 / x^2 = 1/2.
inline constexpr double kSincHalfMaxAbscissa = 1.39155737825151;

// FWHM/length anchor of the tuning curve: a 2.0 cm interaction length gives a
// 0.5 nm wide acceptance at this wavelength scale, and FWHM scales as 1/L.
inline constexpr double kShgReferenceLengthCm = 2.0;
inline constexpr double kShgReferenceFwhmNm = 0.5;

// Normalised SHG efficiency (%/W) at the given fundamental wavelength.
inline double shg_efficiency(const PPWaveguideSpec& spec, double lambda_nm) {
  if (!(spec.shg_fwhm_nm > 0.0)) {
    throw std::invalid_argument("shg_efficiency: FWHM must be positive");
  }
  const double x = 2.0 * kSincHalfMaxAbscissa *
                   (lambda_nm - spec.phase_match_wavelength_nm) /
                   spec.shg_fwhm_nm;
  if (x == 0.0) {
    return spec.peak_conversion_pct_per_w;
  }
  const double s = std::sin(x) / x;
  return spec.peak_conversion_pct_per_w * s * s;
}

// Interaction length implied by a fitted acceptance bandwidth.
inline double interaction_length_from_fwhm(double fwhm_nm) {
  if (!(fwhm_nm > 0.0)) {
    throw std::invalid_argument(
        "interaction_length_from_fwhm: FWHM must be positive");
  }
  return kShgReferenceLengthCm * kShgReferenceFwhmNm / fwhm_nm;
}

// Projected squeezing (dB) for a scaled device: the squeezing scale factor
// grows linearly with interaction length, r = mu * (L / L_ref) * sqrt(P).
inline double project_squeezing_db(double mu_per_sqrt_mw, double mu_length_cm,
                                   double target_length_cm,
                                   double target_power_mw, double eta) {
  if (!(mu_length_cm > 0.0) || !(target_length_cm > 0.0)) {
    throw std::invalid_argument("project_squeezing_db: lengths must be positive");
  }
  if (!(eta > 0.0 && eta <= 1.0)) {
    throw std::invalid_argument(
        "project_squeezing_db: efficiency must lie in (0, 1]");
  }
  const double r = mu_per_sqrt_mw * (target_length_cm / mu_length_cm) *
                   std::sqrt(target_power_mw);
  return 10.0 * std::log10(eta * std::exp(-2.0 * r) + 1.0 - eta);
}

// ---------------------------------------------------------------------------
// Circuit compilation
// ---------------------------------------------------------------------------

// Homodyne measurement metadata attached to a compiled circuit.  The local
// oscillator is treated classically; its only observable effects are the
// measured quadrature angle and the detection-stage efficiency.
struct HomodyneSpec {
  int mode = 0;
  double lo_phase_rad = 0.0;
  double efficiency = 1.0;
};

struct CircuitOp {
  enum class Kind { squeeze, loss, coupler };
  Kind kind = Kind::loss;
  int mode_a = 0;
  int mode_b = 0;
  double param_1 = 0.0;  // squeeze: r      loss: transmissivity  coupler: sr
  double param_2 = 0.0;  // squeeze: angle

  static CircuitOp make_squeeze(int mode, double r, double angle) {
    return {Kind::squeeze, mode, 0, r, angle};
  }
  static CircuitOp make_loss(int mode, double transmissivity) {
    return {Kind::loss, mode, 0, transmissivity, 0.0};
  }
  static CircuitOp make_coupler(int mode_a, int mode_b, double sr) {
    return {Kind::coupler, mode_a, mode_b, sr, 0.0};
  }
};

struct CompiledCircuit {
  std::vector<CircuitOp> ops;
  std::array<HomodyneSpec, 2> homodyne;
};

inline void apply_op(GaussianState& state, const CircuitOp& op) {
  switch (op.kind) {
    case CircuitOp::Kind::squeeze:
      squeeze(state, op.mode_a, op.param_1, op.param_2);
      break;
    case CircuitOp::Kind::loss:
      loss(state, op.mode_a, op.param_1);
      break;
    case CircuitOp::Kind::coupler:
      beamsplitter(state, op.mode_a, op.mode_b, op.param_1);
      break;
  }
}

// State at the output facet (detection-stage efficiency not yet applied).
inline GaussianState run_circuit(const CompiledCircuit& circuit) {
  GaussianState state = vacuum(2);
  for (const CircuitOp& op : circuit.ops) {
    apply_op(state, op);
  }
  return state;
}

// State as seen by the homodyne detectors: circuit output with each
// detector's efficiency folded in as a loss on its mode.
inline GaussianState detected_state(const CompiledCircuit& circuit) {
  GaussianState state = run_circuit(circuit);
  for (const HomodyneSpec& hd : circuit.homodyne) {
    loss(state, hd.mode, hd.efficiency);
  }
  return state;
}

namespace detail {

inline double electrode_voltage(const ControlSetting& setting,
                                const std::string& name) {
  const auto it = setting.voltages.find(name);
  return it == setting.voltages.end() ? 0.0 : it->second;
}

inline void check_voltage_range(const std::string& name, double volts,
                                double range) {
  if (std::abs(volts) > range + 1e-12) {
    throw std::invalid_argument("build_circuit: electrode '" + name +
                                "' driven at " + std::to_string(volts) +
                                " V, outside +/-" + std::to_string(range) +
                                " V");
  }
}

}  // namespace detail

// Lowers a static drive point to the operation list actually simulated.
// Per arm: squeezer, propagation to the pump filter + entangling coupler,
// pump-filter transmission; then the entangling coupler mixes the arms; then
// remaining propagation and the output facet.  Detector quantum efficiency
// and dark-noise clearance are attached to the homodyne metadata rather than
// emitted as operations, so that measurement-stage and transmission-stage
// imperfections stay separately auditable.
inline CompiledCircuit build_circuit(const ChipNetlist& chip,
                                     const ControlSetting& setting) {
  static const char* kKnownElectrodes[] = {"dc1", "dc4", "dc5", "lo1", "lo2"};
  for (const auto& [name, volts] : setting.voltages) {
    bool known = false;
    for (const char* candidate : kKnownElectrodes) {
      known = known || name == candidate;
    }
    if (!known) {
      throw std::invalid_argument("build_circuit: unknown electrode '" + name +
                                  "'");
    }
    (void)volts;
  }

  const double v_dc1 = detail::electrode_voltage(setting, "dc1");
  detail::check_voltage_range("dc1", v_dc1,
                              chip.entangling_coupler.voltage_range_v);
  for (int k = 0; k < 2; ++k) {
    const std::string dc_name = k == 0 ? "dc4" : "dc5";
    detail::check_voltage_range(dc_name,
                                detail::electrode_voltage(setting, dc_name),
                                chip.homodyne_couplers[k].voltage_range_v);
    const std::string lo_name = k == 0 ? "lo1" : "lo2";
    detail::check_voltage_range(lo_name,
                                detail::electrode_voltage(setting, lo_name),
                                chip.lo_phase_shifters[k].voltage_range_v);
  }

  CompiledCircuit circuit;
  circuit.ops.reserve(9);
  for (int arm = 0; arm < 2; ++arm) {
    const double power = setting.pump_power_mw[arm];
    const double r = squeezing_from_pump(chip.sources[arm], power);
    // A parametric squeezer's ellipse orientation follows half the pump
    // phase; scanning the pump phase by 2 pi rotates the ellipse by pi.
    circuit.ops.push_back(
        CircuitOp::make_squeeze(arm, r, 0.5 * setting.pump_phase_rad[arm]));
  }
  for (int arm = 0; arm < 2; ++arm) {
    const double before = std::pow(
        10.0, -0.1 * chip.signal_loss_db_per_cm *
                  chip.signal_path[arm].before_coupler_cm);
    circuit.ops.push_back(CircuitOp::make_loss(arm, before));
    circuit.ops.push_back(
        CircuitOp::make_loss(arm, chip.pump_filter_sr[arm]));
  }
  circuit.ops.push_back(CircuitOp::make_coupler(
      0, 1, coupler_splitting_ratio(chip.entangling_coupler, v_dc1)));
  for (int arm = 0; arm < 2; ++arm) {
    const double after = std::pow(
        10.0, -0.1 * chip.signal_loss_db_per_cm *
                  chip.signal_path[arm].after_coupler_cm);
    circuit.ops.push_back(CircuitOp::make_loss(arm, after));
    circuit.ops.push_back(CircuitOp::make_loss(arm, 1.0 - chip.facet_loss));
  }

  for (int k = 0; k < 2; ++k) {
    circuit.homodyne[k].mode = k;
    circuit.homodyne[k].lo_phase_rad = phase_from_voltage(
        chip.lo_phase_shifters[k],
        detail::electrode_voltage(setting, k == 0 ? "lo1" : "lo2"));
    circuit.homodyne[k].efficiency = chip.detector.efficiency();
  }
  return circuit;
}

// Variance of the quadrature measured by homodyne detector `which` (0 or 1),
// with the LO phase optionally offset from the compiled value.
inline double detected_variance(const CompiledCircuit& circuit, int which,
                                double extra_lo_phase = 0.0) {
  if (which < 0 || which > 1) {
    throw std::out_of_range("detected_variance: detector index must be 0 or 1");
  }
  const GaussianState state = detected_state(circuit);
  const HomodyneSpec& hd = circuit.homodyne[which];
  return quadrature_variance(state, hd.mode,
                             hd.lo_phase_rad + extra_lo_phase);
}

}  // namespace sqz
