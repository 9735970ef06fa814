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

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "sqz/rng.hpp"

namespace sqz {

inline constexpr double kPi = std::numbers::pi;

// ---------------------------------------------------------------------------
// Gaussian states
//
// Conventions used throughout the library:
//   * Mode k owns the quadrature pair (x_k, p_k) stored at indices
//     (2k, 2k+1) of the mean vector and covariance matrix.
//   * Covariances are in shot-noise units: the vacuum state has cov = I,
//     i.e. Var[X(theta)] = 1 for every quadrature angle theta.
//   * The rotated quadrature is X(theta) = x cos(theta) + p sin(theta).
// ---------------------------------------------------------------------------

struct GaussianState {
  Eigen::VectorXd mean;  // length 2N
  Eigen::MatrixXd cov;   // 2N x 2N, symmetric

  int n_modes() const { return static_cast<int>(mean.size()) / 2; }
};

// Vacuum on n_modes modes: zero mean, identity covariance.
inline GaussianState vacuum(int n_modes) {
  if (n_modes < 1) {
    throw std::invalid_argument("vacuum: mode count must be positive");
  }
  GaussianState s;
  s.mean = Eigen::VectorXd::Zero(2 * n_modes);
  s.cov = Eigen::MatrixXd::Identity(2 * n_modes, 2 * n_modes);
  return s;
}

namespace detail {

inline void check_mode(const GaussianState& s, int mode, const char* who) {
  if (mode < 0 || mode >= s.n_modes()) {
    throw std::out_of_range(std::string(who) + ": mode index " +
                            std::to_string(mode) + " out of range for " +
                            std::to_string(s.n_modes()) + " modes");
  }
}

// Applies the 2x2 map M to the (row_a, row_b) row pair and column pair of
// the covariance (i.e. cov -> S cov S^T with S acting on those two
// components only) and to the matching mean entries.  Runs in place with no
// heap traffic; this is the hot path of circuit compilation.
inline void apply_pair_map(GaussianState& s, int row_a, int row_b, double m00,
                           double m01, double m10, double m11) {
  const int n = static_cast<int>(s.mean.size());
  for (int j = 0; j < n; ++j) {
    const double x = s.cov(row_a, j), y = s.cov(row_b, j);
    s.cov(row_a, j) = m00 * x + m01 * y;
    s.cov(row_b, j) = m10 * x + m11 * y;
  }
  for (int i = 0; i < n; ++i) {
    const double x = s.cov(i, row_a), y = s.cov(i, row_b);
    s.cov(i, row_a) = m00 * x + m01 * y;
    s.cov(i, row_b) = m10 * x + m11 * y;
  }
  // The off-diagonal of the touched 2x2 block is the only place where the
  // two passes can disagree at rounding level; pin it symmetric.
  s.cov(row_b, row_a) = s.cov(row_a, row_b);
  const double mx = s.mean(row_a), my = s.mean(row_b);
  s.mean(row_a) = m00 * mx + m01 * my;
  s.mean(row_b) = m10 * mx + m11 * my;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Symplectic building blocks
// ---------------------------------------------------------------------------

// Single-mode rotation R(phi) in quadrature space.  Conjugating a state by
// R(phi) advances the quadrature frame so that the variance profile shifts:
// Var[X(theta)] afterwards equals Var[X(theta - phi)] before.
inline Eigen::Matrix2d phase_shift_symplectic(double phi) {
  Eigen::Matrix2d r;
  r << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
  return r;
}

// Squeezer with squeezed quadrature at `angle`:
// S = R(angle) diag(e^-r, e^+r) R(angle)^T, so Var[X(angle)] = e^{-2r}.
inline Eigen::Matrix2d squeeze_symplectic(double r, double angle) {
  const Eigen::Matrix2d rot = phase_shift_symplectic(angle);
  Eigen::Matrix2d d;
  d << std::exp(-r), 0.0, 0.0, std::exp(r);
  return rot * d * rot.transpose();
}

// Beamsplitter of splitting ratio sr (power fraction coupled across) acting
// on two modes, ordered (x_a, p_a, x_b, p_b).  Real orthogonal, so it acts
// identically on the x and p planes.
inline Eigen::Matrix4d beamsplitter_symplectic(double splitting_ratio) {
  if (!(splitting_ratio >= 0.0 && splitting_ratio <= 1.0)) {
    throw std::invalid_argument(
        "beamsplitter: splitting ratio must lie in [0, 1]");
  }
  const double t = std::sqrt(1.0 - splitting_ratio);
  const double u = std::sqrt(splitting_ratio);
  Eigen::Matrix4d b = Eigen::Matrix4d::Zero();
  b(0, 0) = t; b(0, 2) = u;
  b(2, 0) = -u; b(2, 2) = t;
  b(1, 1) = t; b(1, 3) = u;
  b(3, 1) = -u; b(3, 3) = t;
  return b;
}

// Symplectic form Omega = direct sum of [[0, 1], [-1, 0]] per mode.
inline Eigen::MatrixXd symplectic_form(int n_modes) {
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(2 * n_modes, 2 * n_modes);
  for (int k = 0; k < n_modes; ++k) {
    omega(2 * k, 2 * k + 1) = 1.0;
    omega(2 * k + 1, 2 * k) = -1.0;
  }
  return omega;
}

// Largest entry of S Omega S^T - Omega; zero for an exact symplectic map.
inline double symplectic_defect(const Eigen::MatrixXd& s) {
  if (s.rows() != s.cols() || s.rows() % 2 != 0) {
    throw std::invalid_argument(
        "symplectic_defect: matrix must be square with even dimension");
  }
  const Eigen::MatrixXd omega = symplectic_form(static_cast<int>(s.rows()) / 2);
  return (s * omega * s.transpose() - omega).cwiseAbs().maxCoeff();
}

inline bool is_symplectic(const Eigen::MatrixXd& s, double tol = 1e-10) {
  return symplectic_defect(s) <= tol;
}

// A symplectic map together with the modes it acts on.  This is the general
// (reference) route for applying unitary Gaussian operations; the named
// operations below use specialised in-place kernels and must agree with it.
struct SymplecticOp {
  Eigen::MatrixXd matrix;         // 2m x 2m, m = target_modes.size()
  std::vector<int> target_modes;  // distinct mode indices
};

inline void apply_symplectic(GaussianState& s, const SymplecticOp& op) {
  const int m = static_cast<int>(op.target_modes.size());
  if (op.matrix.rows() != 2 * m || op.matrix.cols() != 2 * m) {
    throw std::invalid_argument(
        "apply_symplectic: matrix dimension does not match target modes");
  }
  for (int i = 0; i < m; ++i) {
    detail::check_mode(s, op.target_modes[i], "apply_symplectic");
    for (int j = i + 1; j < m; ++j) {
      if (op.target_modes[i] == op.target_modes[j]) {
        throw std::invalid_argument(
            "apply_symplectic: target modes must be distinct");
      }
    }
  }
  // Embed into the full 2N-dimensional map.  Clarity over speed: this routine
  // exists as the reference implementation and for tests.
  const int n = static_cast<int>(s.mean.size());
  Eigen::MatrixXd full = Eigen::MatrixXd::Identity(n, n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      full.block<2, 2>(2 * op.target_modes[i], 2 * op.target_modes[j]) =
          op.matrix.block<2, 2>(2 * i, 2 * j);
    }
  }
  s.cov = full * s.cov * full.transpose();
  s.mean = full * s.mean;
}

// ---------------------------------------------------------------------------
// Named operations (in-place fast paths)
// ---------------------------------------------------------------------------

inline void squeeze(GaussianState& s, int mode, double r, double angle) {
  detail::check_mode(s, mode, "squeeze");
  const Eigen::Matrix2d m = squeeze_symplectic(r, angle);
  detail::apply_pair_map(s, 2 * mode, 2 * mode + 1, m(0, 0), m(0, 1), m(1, 0),
                         m(1, 1));
}

inline void phase_shift(GaussianState& s, int mode, double phi) {
  detail::check_mode(s, mode, "phase_shift");
  const Eigen::Matrix2d m = phase_shift_symplectic(phi);
  detail::apply_pair_map(s, 2 * mode, 2 * mode + 1, m(0, 0), m(0, 1), m(1, 0),
                         m(1, 1));
}

inline void beamsplitter(GaussianState& s, int mode_a, int mode_b,
                         double splitting_ratio) {
  detail::check_mode(s, mode_a, "beamsplitter");
  detail::check_mode(s, mode_b, "beamsplitter");
  if (mode_a == mode_b) {
    throw std::invalid_argument("beamsplitter: modes must be distinct");
  }
  if (!(splitting_ratio >= 0.0 && splitting_ratio <= 1.0)) {
    throw std::invalid_argument(
        "beamsplitter: splitting ratio must lie in [0, 1]");
  }
  const double t = std::sqrt(1.0 - splitting_ratio);
  const double u = std::sqrt(splitting_ratio);
  // The map is block-scalar, so x and p planes mix independently.
  detail::apply_pair_map(s, 2 * mode_a, 2 * mode_b, t, u, -u, t);
  detail::apply_pair_map(s, 2 * mode_a + 1, 2 * mode_b + 1, t, u, -u, t);
}

// Pure-loss channel of transmissivity eta: cov -> D cov D + (I - D^2) with
// D = diag(sqrt(eta), sqrt(eta)) on the target mode, mean -> sqrt(eta) mean.
// Composes as loss(eta1) o loss(eta2) = loss(eta1 * eta2).
inline void loss(GaussianState& s, int mode, double transmissivity) {
  detail::check_mode(s, mode, "loss");
  if (!(transmissivity >= 0.0 && transmissivity <= 1.0)) {
    throw std::invalid_argument("loss: transmissivity must lie in [0, 1]");
  }
  const double root = std::sqrt(transmissivity);
  const int a = 2 * mode, b = 2 * mode + 1;
  const int n = static_cast<int>(s.mean.size());
  for (int j = 0; j < n; ++j) {
    s.cov(a, j) *= root;
    s.cov(b, j) *= root;
  }
  for (int i = 0; i < n; ++i) {
    s.cov(i, a) *= root;
    s.cov(i, b) *= root;
  }
  s.cov(a, a) += 1.0 - transmissivity;
  s.cov(b, b) += 1.0 - transmissivity;
  s.mean(a) *= root;
  s.mean(b) *= root;
}

// ---------------------------------------------------------------------------
// Quadrature statistics and sampling
// ---------------------------------------------------------------------------

inline double quadrature_mean(const GaussianState& s, int mode, double theta) {
  detail::check_mode(s, mode, "quadrature_mean");
  return std::cos(theta) * s.mean(2 * mode) +
         std::sin(theta) * s.mean(2 * mode + 1);
}

inline double quadrature_variance(const GaussianState& s, int mode,
                                  double theta) {
  detail::check_mode(s, mode, "quadrature_variance");
  const int a = 2 * mode, b = 2 * mode + 1;
  const double c = std::cos(theta), sn = std::sin(theta);
  return c * c * s.cov(a, a) + 2.0 * c * sn * s.cov(a, b) +
         sn * sn * s.cov(b, b);
}

// Cov[X_m1(theta1), X_m2(theta2)].
inline double quadrature_covariance(const GaussianState& s, int mode_1,
                                    double theta_1, int mode_2,
                                    double theta_2) {
  detail::check_mode(s, mode_1, "quadrature_covariance");
  detail::check_mode(s, mode_2, "quadrature_covariance");
  const int a1 = 2 * mode_1, b1 = 2 * mode_1 + 1;
  const int a2 = 2 * mode_2, b2 = 2 * mode_2 + 1;
  const double c1 = std::cos(theta_1), s1 = std::sin(theta_1);
  const double c2 = std::cos(theta_2), s2 = std::sin(theta_2);
  return c1 * c2 * s.cov(a1, a2) + c1 * s2 * s.cov(a1, b2) +
         s1 * c2 * s.cov(b1, a2) + s1 * s2 * s.cov(b1, b2);
}

enum class CombineSign { plus, minus };

inline double sign_value(CombineSign s) {
  return s == CombineSign::plus ? 1.0 : -1.0;
}

// Variance of the normalised joint quadrature
// (X_m1(theta1) +/- X_m2(theta2)) / sqrt(2).
inline double joint_quadrature_variance(const GaussianState& s, int mode_1,
                                        int mode_2, double theta_1,
                                        double theta_2, CombineSign sign) {
  if (mode_1 == mode_2) {
    throw std::invalid_argument(
        "joint_quadrature_variance: modes must be distinct");
  }
  const double v1 = quadrature_variance(s, mode_1, theta_1);
  const double v2 = quadrature_variance(s, mode_2, theta_2);
  const double c = quadrature_covariance(s, mode_1, theta_1, mode_2, theta_2);
  return 0.5 * (v1 + v2 + 2.0 * sign_value(sign) * c);
}

// One homodyne draw of X_mode(theta).
inline double sample_quadrature(const GaussianState& s, int mode, double theta,
                                GaussianSampler& rng) {
  const double v = quadrature_variance(s, mode, theta);
  return quadrature_mean(s, mode, theta) + std::sqrt(v) * rng.normal();
}

// Joint homodyne draw on two distinct modes, preserving the quadrature
// cross-correlation via the Cholesky factor of the 2x2 covariance.  Two
// independent single-mode draws would destroy exactly the correlations that
// two-mode squeezing is about, so paired detectors must use this routine.
inline std::pair<double, double> sample_quadrature_pair(
    const GaussianState& s, int mode_1, double theta_1, int mode_2,
    double theta_2, GaussianSampler& rng) {
  if (mode_1 == mode_2) {
    throw std::invalid_argument("sample_quadrature_pair: modes must be distinct");
  }
  const double v11 = quadrature_variance(s, mode_1, theta_1);
  const double v22 = quadrature_variance(s, mode_2, theta_2);
  const double v12 = quadrature_covariance(s, mode_1, theta_1, mode_2, theta_2);
  // Cholesky of [[v11, v12], [v12, v22]].  v11 > 0 for any physical state
  // (loss keeps variances >= 1 - eta and the vacuum floor is 1).
  const double l11 = std::sqrt(v11);
  const double l21 = v12 / l11;
  const double l22 = std::sqrt(std::max(v22 - l21 * l21, 0.0));
  const double z1 = rng.normal();
  const double z2 = rng.normal();
  return {quadrature_mean(s, mode_1, theta_1) + l11 * z1,
          quadrature_mean(s, mode_2, theta_2) + l21 * z1 + l22 * z2};
}

// ---------------------------------------------------------------------------
// State diagnostics
// ---------------------------------------------------------------------------

// Minimum eigenvalue of cov + i Omega.  Physical states satisfy the
// uncertainty relation cov + i Omega >= 0 (up to numerical noise).
inline double uncertainty_min_eigenvalue(const GaussianState& s) {
  const int n = static_cast<int>(s.mean.size());
  Eigen::MatrixXcd h = s.cov.cast<std::complex<double>>();
  const Eigen::MatrixXd omega = symplectic_form(s.n_modes());
  h += std::complex<double>(0.0, 1.0) * omega.cast<std::complex<double>>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error(
        "uncertainty_min_eigenvalue: eigenvalue solve failed");
  }
  (void)n;
  return solver.eigenvalues().minCoeff();
}

// Purity tr(rho^2) = 1 / sqrt(det(cov)) in shot-noise units.
inline double purity(const GaussianState& s) {
  return 1.0 / std::sqrt(s.cov.determinant());
}

// Mean photon number summed over modes:
// <n> = sum_k (cov_kk contributions + mean^2)/4 - N/2 in these units.
inline double mean_photon_number(const GaussianState& s) {
  const double trace = s.cov.trace();
  const double displacement = s.mean.squaredNorm();
  return 0.25 * (trace + displacement) - 0.5 * s.n_modes();
}

}  // namespace sqz
