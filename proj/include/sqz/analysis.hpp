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
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "sqz/drive.hpp"
#include "sqz/fit.hpp"

namespace sqz {

// ---------------------------------------------------------------------------
// Variance-scan fit
//
// When the local oscillator ramps linearly in time, the measured noise
// power follows
//
//   V(t) = v_plus cos^2(a t + phi) + v_minus sin^2(a t + phi)
//
// with scan rate a (rad/s) and the anti-squeezed quadrature sitting at
// a t + phi = 0 (mod pi).
// ---------------------------------------------------------------------------

struct VarianceScanFit {
  double v_plus = 0.0;
  double v_minus = 0.0;
  double scan_rate = 0.0;  // rad/s
  double phase = 0.0;      // rad, wrapped to [0, pi)
  double se_v_plus = 0.0;
  double se_v_minus = 0.0;
  double se_scan_rate = 0.0;
  double se_phase = 0.0;
  double rss = 0.0;
  int n_points = 0;
  int iterations = 0;
  bool converged = false;
  bool phase_identifiable = true;
};

namespace detail {

struct ScanModel {
  const std::vector<double>& t;
  const std::vector<double>& y;

  void operator()(const Eigen::VectorXd& p, Eigen::VectorXd& residuals,
                  Eigen::MatrixXd* jacobian) const {
    const double v_plus = p(0), v_minus = p(1), a = p(2), phi = p(3);
    const double mid = 0.5 * (v_plus + v_minus);
    const double amp = 0.5 * (v_plus - v_minus);
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double arg = 2.0 * (a * t[i] + phi);
      const double c = std::cos(arg);
      residuals(static_cast<int>(i)) = mid + amp * c - y[i];
      if (jacobian != nullptr) {
        const double s = std::sin(arg);
        (*jacobian)(static_cast<int>(i), 0) = 0.5 * (1.0 + c);
        (*jacobian)(static_cast<int>(i), 1) = 0.5 * (1.0 - c);
        (*jacobian)(static_cast<int>(i), 2) = -2.0 * t[i] * amp * s;
        (*jacobian)(static_cast<int>(i), 3) = -2.0 * amp * s;
      }
    }
  }
};

}  // namespace detail

// Fits the scan model to a variance trace.  `scan_rate_hint` is the nominal
// LO phase slope (rad/s) implied by the drive schedule; the fit refines it.
// Initialisation scans a 32-node phase grid, solving the linear subproblem
// in (v_plus, v_minus) exactly at each node.
inline VarianceScanFit fit_variance_scan(const VarianceTrace& scan,
                                         double scan_rate_hint) {
  const std::size_t n = scan.size();
  if (n < 5) {
    throw std::invalid_argument(
        "fit_variance_scan: need at least five variance points");
  }

  // Phase coverage of the scan decides whether the phase (and the split
  // between v_plus and v_minus) is identifiable at all.
  const double span = std::abs(scan_rate_hint) *
                      (scan.time_s.back() - scan.time_s.front());

  double best_phi = 0.0, best_v_plus = 1.0, best_v_minus = 1.0;
  double best_rss = std::numeric_limits<double>::infinity();
  for (int node = 0; node < 32; ++node) {
    const double phi = kPi * node / 32.0;
    // Linear least squares in (v_plus, v_minus) for fixed (a, phi).
    double scc = 0.0, css = 0.0, ssc = 0.0, yc = 0.0, ys = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double arg = scan_rate_hint * scan.time_s[i] + phi;
      const double c2 = std::cos(arg) * std::cos(arg);
      const double s2 = 1.0 - c2;
      scc += c2 * c2;
      css += c2 * s2;
      ssc += s2 * s2;
      yc += scan.variance[i] * c2;
      ys += scan.variance[i] * s2;
    }
    const double det = scc * ssc - css * css;
    if (std::abs(det) < 1e-12 * (scc * ssc + 1e-300)) {
      continue;  // degenerate node (no phase evolution)
    }
    const double v_plus = (yc * ssc - ys * css) / det;
    const double v_minus = (ys * scc - yc * css) / det;
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double arg = scan_rate_hint * scan.time_s[i] + phi;
      const double c2 = std::cos(arg) * std::cos(arg);
      const double model = v_plus * c2 + v_minus * (1.0 - c2);
      rss += (model - scan.variance[i]) * (model - scan.variance[i]);
    }
    if (rss < best_rss) {
      best_rss = rss;
      best_phi = phi;
      best_v_plus = v_plus;
      best_v_minus = v_minus;
    }
  }

  VarianceScanFit out;
  out.n_points = static_cast<int>(n);
  if (!std::isfinite(best_rss) || span < 1e-6) {
    // The scan never moves the quadrature: report the mean level and flag
    // the degeneracy instead of fabricating a phase.
    double mean = 0.0;
    for (double v : scan.variance) mean += v;
    mean /= static_cast<double>(n);
    out.v_plus = out.v_minus = mean;
    out.scan_rate = scan_rate_hint;
    out.phase_identifiable = false;
    return out;
  }

  Eigen::VectorXd p0(4);
  p0 << best_v_plus, best_v_minus, scan_rate_hint, best_phi;
  const detail::ScanModel model{scan.time_s, scan.variance};
  const FitResult fit =
      fit_least_squares(model, p0, static_cast<int>(n));

  out.v_plus = fit.parameters(0);
  out.v_minus = fit.parameters(1);
  out.scan_rate = fit.parameters(2);
  out.phase = fit.parameters(3);
  out.se_v_plus = fit.standard_errors(0);
  out.se_v_minus = fit.standard_errors(1);
  out.se_scan_rate = fit.standard_errors(2);
  out.se_phase = fit.standard_errors(3);
  out.rss = fit.rss;
  out.iterations = fit.iterations;
  out.converged = fit.converged;
  out.phase_identifiable = !fit.rank_deficient;

  // Canonical form: v_plus >= v_minus, phase wrapped into [0, pi).  Swapping
  // the branches shifts the phase by pi/2 and leaves the model unchanged.
  if (out.v_plus < out.v_minus) {
    std::swap(out.v_plus, out.v_minus);
    std::swap(out.se_v_plus, out.se_v_minus);
    out.phase += kPi / 2.0;
  }
  out.phase -= kPi * std::floor(out.phase / kPi);
  return out;
}

// ---------------------------------------------------------------------------
// Squeezing vs pump power
//
//   v_-(P) = eta exp(-2 mu sqrt(P)) + 1 - eta
//   v_+(P) = eta exp(+2 mu sqrt(P)) + 1 - eta
// ---------------------------------------------------------------------------

struct PowerSweepPoint {
  double power_mw = 0.0;
  double v_minus = 0.0;  // linear variance, shot-noise units
  double v_plus = 0.0;
};

struct PowerSweepFit {
  double mu = 0.0;   // squeezing scale, 1/sqrt(mW)
  double eta = 0.0;  // end-to-end detection efficiency
  double se_mu = 0.0;
  double se_eta = 0.0;
  double ci95_mu = 0.0;
  double ci95_eta = 0.0;
  double rss = 0.0;
  int degrees_of_freedom = 0;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

struct PowerSweepModel {
  std::span<const PowerSweepPoint> points;

  void operator()(const Eigen::VectorXd& p, Eigen::VectorXd& residuals,
                  Eigen::MatrixXd* jacobian) const {
    const double mu = p(0), eta = p(1);
    const int n = static_cast<int>(points.size());
    for (int i = 0; i < n; ++i) {
      const double root_p = std::sqrt(points[i].power_mw);
      const double down = std::exp(-2.0 * mu * root_p);
      const double up = std::exp(2.0 * mu * root_p);
      residuals(2 * i) = eta * down + 1.0 - eta - points[i].v_minus;
      residuals(2 * i + 1) = eta * up + 1.0 - eta - points[i].v_plus;
      if (jacobian != nullptr) {
        (*jacobian)(2 * i, 0) = -2.0 * root_p * eta * down;
        (*jacobian)(2 * i, 1) = down - 1.0;
        (*jacobian)(2 * i + 1, 0) = 2.0 * root_p * eta * up;
        (*jacobian)(2 * i + 1, 1) = up - 1.0;
      }
    }
  }
};

}  // namespace detail

// Closed-form inversion of one (v_minus, v_plus) pair into the squeezing
// parameter r and effective efficiency eta.
struct SqueezingInversion {
  double r = 0.0;
  double eta = 0.0;
};

inline SqueezingInversion invert_squeezing_pair(double v_minus,
                                                double v_plus) {
  if (!(v_minus > 0.0 && v_minus < 1.0)) {
    throw std::invalid_argument(
        "invert_squeezing_pair: squeezed variance must lie in (0, 1)");
  }
  if (!(v_plus > 1.0)) {
    throw std::invalid_argument(
        "invert_squeezing_pair: anti-squeezed variance must exceed 1");
  }
  const double e2r = (v_plus - 1.0) / (1.0 - v_minus);
  if (!(e2r > 1.0)) {
    throw std::invalid_argument(
        "invert_squeezing_pair: pair is inconsistent with a lossy squeezer "
        "(anti-squeezing does not exceed squeezing)");
  }
  SqueezingInversion out;
  out.r = 0.5 * std::log(e2r);
  out.eta = (v_plus - 1.0) / (e2r - 1.0);
  if (out.eta > 1.0 + 1e-12) {
    throw std::invalid_argument(
        "invert_squeezing_pair: implied efficiency exceeds unity");
  }
  out.eta = std::min(out.eta, 1.0);
  return out;
}

// Single-arm noise level when two orthogonally squeezed modes of equal
// strength r interfere on a balanced coupler and reach the detector with
// efficiency eta: the arm looks thermal at eta cosh(2r) + 1 - eta.
inline double antiphase_arm_variance(double r, double eta) {
  return eta * std::cosh(2.0 * r) + 1.0 - eta;
}

inline PowerSweepFit fit_power_sweep(std::span<const PowerSweepPoint> points) {
  if (points.size() < 2) {
    throw std::invalid_argument("fit_power_sweep: need at least two points");
  }
  for (const PowerSweepPoint& pt : points) {
    if (!(pt.power_mw > 0.0)) {
      throw std::invalid_argument(
          "fit_power_sweep: pump powers must be positive");
    }
  }

  // Initialise from the highest-power pair (strongest signal); fall back to
  // a generic guess if that pair is not invertible.
  double mu0 = 0.02, eta0 = 0.5;
  const auto strongest = std::max_element(
      points.begin(), points.end(),
      [](const PowerSweepPoint& a, const PowerSweepPoint& b) {
        return a.power_mw < b.power_mw;
      });
  try {
    const SqueezingInversion inv =
        invert_squeezing_pair(strongest->v_minus, strongest->v_plus);
    mu0 = inv.r / std::sqrt(strongest->power_mw);
    eta0 = inv.eta;
  } catch (const std::invalid_argument&) {
    // keep the generic initialisation
  }

  Eigen::VectorXd p0(2);
  p0 << mu0, eta0;
  const detail::PowerSweepModel model{points};
  const FitResult fit =
      fit_least_squares(model, p0, 2 * static_cast<int>(points.size()));

  PowerSweepFit out;
  out.mu = fit.parameters(0);
  out.eta = fit.parameters(1);
  out.se_mu = fit.standard_errors(0);
  out.se_eta = fit.standard_errors(1);
  out.ci95_mu = fit.ci95_halfwidth(0);
  out.ci95_eta = fit.ci95_halfwidth(1);
  out.rss = fit.rss;
  out.degrees_of_freedom = fit.degrees_of_freedom;
  out.iterations = fit.iterations;
  out.converged = fit.converged;
  return out;
}

// ---------------------------------------------------------------------------
// Second-harmonic tuning-curve fit
//
//   eta(lambda) = peak sinc^2( 2 x_half (lambda - centre) / fwhm )
// ---------------------------------------------------------------------------

struct ShgPoint {
  double lambda_nm = 0.0;
  double efficiency_pct_per_w = 0.0;
};

struct ShgFit {
  double peak_pct_per_w = 0.0;
  double center_nm = 0.0;
  double fwhm_nm = 0.0;
  double se_peak = 0.0;
  double se_center = 0.0;
  double se_fwhm = 0.0;
  double inferred_length_cm = 0.0;
  double rss = 0.0;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

inline void sinc_sq_and_slope(double u, double& value, double& slope) {
  if (std::abs(u) < 1e-6) {
    // Series around u = 0: sinc^2 = 1 - u^2/3 + ...
    value = 1.0 - u * u / 3.0;
    slope = -2.0 * u / 3.0;
    return;
  }
  const double s = std::sin(u) / u;
  value = s * s;
  slope = 2.0 * s * (std::cos(u) * u - std::sin(u)) / (u * u);
}

struct ShgModel {
  std::span<const ShgPoint> points;

  void operator()(const Eigen::VectorXd& p, Eigen::VectorXd& residuals,
                  Eigen::MatrixXd* jacobian) const {
    const double peak = p(0), centre = p(1), fwhm = p(2);
    const int n = static_cast<int>(points.size());
    for (int i = 0; i < n; ++i) {
      const double u = 2.0 * kSincHalfMaxAbscissa *
                       (points[i].lambda_nm - centre) / fwhm;
      double value, slope;
      sinc_sq_and_slope(u, value, slope);
      residuals(i) = peak * value - points[i].efficiency_pct_per_w;
      if (jacobian != nullptr) {
        (*jacobian)(i, 0) = value;
        (*jacobian)(i, 1) =
            peak * slope * (-2.0 * kSincHalfMaxAbscissa / fwhm);
        (*jacobian)(i, 2) = peak * slope * (-u / fwhm);
      }
    }
  }
};

}  // namespace detail

inline ShgFit fit_shg_curve(std::span<const ShgPoint> points) {
  if (points.size() < 4) {
    throw std::invalid_argument("fit_shg_curve: need at least four points");
  }

  // Peak and centre from the maximum sample; width from the half-maximum
  // crossings around it.
  std::size_t peak_index = 0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].efficiency_pct_per_w >
        points[peak_index].efficiency_pct_per_w) {
      peak_index = i;
    }
  }
  const double peak0 = points[peak_index].efficiency_pct_per_w;
  const double centre0 = points[peak_index].lambda_nm;
  if (!(peak0 > 0.0)) {
    throw std::invalid_argument("fit_shg_curve: no positive efficiency found");
  }
  double lo = points.front().lambda_nm, hi = points.back().lambda_nm;
  for (std::size_t i = peak_index; i-- > 0;) {
    if (points[i].efficiency_pct_per_w < 0.5 * peak0) {
      lo = points[i].lambda_nm;
      break;
    }
  }
  for (std::size_t i = peak_index + 1; i < points.size(); ++i) {
    if (points[i].efficiency_pct_per_w < 0.5 * peak0) {
      hi = points[i].lambda_nm;
      break;
    }
  }
  double fwhm0 = hi - lo;
  if (!(fwhm0 > 0.0)) {
    fwhm0 = (points.back().lambda_nm - points.front().lambda_nm) / 4.0;
  }

  Eigen::VectorXd p0(3);
  p0 << peak0, centre0, fwhm0;
  const detail::ShgModel model{points};
  const FitResult fit =
      fit_least_squares(model, p0, static_cast<int>(points.size()));

  ShgFit out;
  out.peak_pct_per_w = fit.parameters(0);
  out.center_nm = fit.parameters(1);
  out.fwhm_nm = std::abs(fit.parameters(2));
  out.se_peak = fit.standard_errors(0);
  out.se_center = fit.standard_errors(1);
  out.se_fwhm = fit.standard_errors(2);
  out.inferred_length_cm = interaction_length_from_fwhm(out.fwhm_nm);
  out.rss = fit.rss;
  out.iterations = fit.iterations;
  out.converged = fit.converged;
  return out;
}

// ---------------------------------------------------------------------------
// Loss correction and entanglement measures
// ---------------------------------------------------------------------------

// Removes a known efficiency eta_c from a measured noise level (shot-noise
// units): v_corrected = 1 - (1 - v) / eta_c.
inline double loss_correct(double variance, double eta_correction) {
  if (!(eta_correction > 0.0 && eta_correction <= 1.0)) {
    throw std::invalid_argument(
        "loss_correct: correction efficiency must lie in (0, 1]");
  }
  const double corrected = 1.0 - (1.0 - variance) / eta_correction;
  if (!(corrected > 0.0)) {
    throw std::invalid_argument(
        "loss_correct: corrected variance is non-positive; the requested "
        "correction exceeds what the measured level allows");
  }
  return corrected;
}

// Normalised photocurrent combination (i1 +/- i2) with each current scaled
// to half shot-noise units, so that two uncorrelated vacua combine to unit
// variance.
inline TimeTrace combine_photocurrents(const TimeTrace& i1,
                                       const TimeTrace& i2,
                                       double shot_noise_level_1,
                                       double shot_noise_level_2,
                                       CombineSign sign) {
  if (i1.samples.size() != i2.samples.size() || i1.dt != i2.dt) {
    throw std::invalid_argument(
        "combine_photocurrents: traces must share length and sample rate");
  }
  if (!(shot_noise_level_1 > 0.0 && shot_noise_level_2 > 0.0)) {
    throw std::invalid_argument(
        "combine_photocurrents: shot-noise levels must be positive");
  }
  const double scale_1 = 1.0 / std::sqrt(2.0 * shot_noise_level_1);
  const double scale_2 = sign_value(sign) / std::sqrt(2.0 * shot_noise_level_2);
  TimeTrace out{i1.dt, std::vector<double>(i1.samples.size())};
  for (std::size_t k = 0; k < i1.samples.size(); ++k) {
    out.samples[k] = scale_1 * i1.samples[k] + scale_2 * i2.samples[k];
  }
  return out;
}

// One branch of the inseparability product, measured on a pair of combined
// variance traces.
struct BranchMeasurement {
  double value = 0.0;      // averaged minimum variance (shot-noise units)
  double se = 0.0;
  CombineSign sign = CombineSign::plus;
  double offset_rad = 0.0;  // averaged position minus the nominal position
  double time_s = 0.0;      // centre of the averaged points
  bool sign_ambiguous = false;
};

// Locates the minimum of each sign's combined variance near the nominal
// quadrature time, averages `average_points` consecutive points centred on
// it, and keeps the lower of the two signs.  The reported uncertainty is the
// per-point standard error reduced by the averaging, and the offset records
// how far (in LO phase) the found extremum sits from the nominal position.
inline BranchMeasurement measure_branch(const VarianceTrace& sum_trace,
                                        const VarianceTrace& diff_trace,
                                        double nominal_time_s,
                                        double search_halfwidth_s,
                                        double rad_per_s,
                                        int average_points = 4) {
  if (sum_trace.size() != diff_trace.size() || sum_trace.size() == 0) {
    throw std::invalid_argument(
        "measure_branch: combined traces must be non-empty and aligned");
  }
  if (average_points < 1) {
    throw std::invalid_argument("measure_branch: need at least one point");
  }

  struct Candidate {
    double value = 0.0;
    double se = 0.0;
    double time = 0.0;
    bool valid = false;
  };

  const auto evaluate = [&](const VarianceTrace& trace) -> Candidate {
    std::vector<std::size_t> in_range;
    for (std::size_t i = 0; i < trace.size(); ++i) {
      if (std::abs(trace.time_s[i] - nominal_time_s) <= search_halfwidth_s) {
        in_range.push_back(i);
      }
    }
    Candidate cand;
    if (in_range.size() < static_cast<std::size_t>(average_points)) {
      return cand;
    }
    std::size_t best = in_range.front();
    for (std::size_t i : in_range) {
      if (trace.variance[i] < trace.variance[best]) {
        best = i;
      }
    }
    // Average a block of `average_points` indices from the in-range set,
    // centred on the minimum as well as the boundaries allow.
    const auto it = std::find(in_range.begin(), in_range.end(), best);
    auto offset = static_cast<std::ptrdiff_t>(it - in_range.begin());
    std::ptrdiff_t start = offset - (average_points - 1) / 2;
    start = std::clamp<std::ptrdiff_t>(
        start, 0,
        static_cast<std::ptrdiff_t>(in_range.size()) - average_points);
    double value = 0.0, se_sq = 0.0, time = 0.0;
    for (int k = 0; k < average_points; ++k) {
      const std::size_t i = in_range[static_cast<std::size_t>(start + k)];
      value += trace.variance[i];
      se_sq += trace.se[i] * trace.se[i];
      time += trace.time_s[i];
    }
    cand.value = value / average_points;
    cand.se = std::sqrt(se_sq) / average_points;
    cand.time = time / average_points;
    cand.valid = true;
    return cand;
  };

  const Candidate sum_cand = evaluate(sum_trace);
  const Candidate diff_cand = evaluate(diff_trace);
  if (!sum_cand.valid || !diff_cand.valid) {
    throw std::invalid_argument(
        "measure_branch: too few variance points near the nominal position");
  }

  BranchMeasurement out;
  const bool pick_sum = sum_cand.value <= diff_cand.value;
  const Candidate& chosen = pick_sum ? sum_cand : diff_cand;
  out.value = chosen.value;
  out.se = chosen.se;
  out.sign = pick_sum ? CombineSign::plus : CombineSign::minus;
  out.time_s = chosen.time;
  out.offset_rad = (chosen.time - nominal_time_s) * rad_per_s;
  out.sign_ambiguous = std::abs(sum_cand.value - diff_cand.value) <
                       std::hypot(sum_cand.se, diff_cand.se);
  return out;
}

struct InseparabilityReport {
  double value = 0.0;  // sqrt of the branch product; < 1 certifies
                       // inseparability
  double se = 0.0;
  BranchMeasurement plus_branch;   // anti-squeezed quadrature pair
  BranchMeasurement minus_branch;  // squeezed quadrature pair
};

inline double inseparability_from_minima(double plus_branch_minimum,
                                         double minus_branch_minimum) {
  if (!(plus_branch_minimum > 0.0 && minus_branch_minimum > 0.0)) {
    throw std::invalid_argument(
        "inseparability_from_minima: branch minima must be positive");
  }
  return std::sqrt(plus_branch_minimum * minus_branch_minimum);
}

inline double inseparability_from_minima_db(double plus_branch_db,
                                            double minus_branch_db) {
  return inseparability_from_minima(std::pow(10.0, plus_branch_db / 10.0),
                                    std::pow(10.0, minus_branch_db / 10.0));
}

inline InseparabilityReport inseparability(
    const BranchMeasurement& plus_branch,
    const BranchMeasurement& minus_branch) {
  InseparabilityReport report;
  report.plus_branch = plus_branch;
  report.minus_branch = minus_branch;
  report.value =
      inseparability_from_minima(plus_branch.value, minus_branch.value);
  // First-order propagation through sqrt(v_p v_m).
  report.se = 0.5 * report.value *
              std::hypot(plus_branch.se / plus_branch.value,
                         minus_branch.se / minus_branch.value);
  return report;
}

}  // namespace sqz
