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
#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace sqz {

// ---------------------------------------------------------------------------
// Damped Gauss-Newton least squares
//
// Minimises |r(p)|^2 for a model providing residuals and an analytic
// Jacobian.  The normal equations are damped multiplicatively,
// (J^T J + lambda diag(J^T J)) step = -J^T r, with lambda shrinking on
// accepted steps and growing on rejected ones.  Parameter uncertainties are
// the usual asymptotic ones, cov = rss / dof * (J^T J)^{-1}, and 95%
// confidence intervals use the Student-t quantile for the residual degrees
// of freedom.
// ---------------------------------------------------------------------------

struct FitOptions {
  int max_iterations = 200;
  double relative_step_tolerance = 1e-10;
  double initial_damping = 1e-3;
  double max_damping = 1e12;
};

struct FitResult {
  Eigen::VectorXd parameters;
  Eigen::VectorXd standard_errors;
  Eigen::MatrixXd covariance;
  double rss = 0.0;
  int iterations = 0;
  int degrees_of_freedom = 0;
  double t_quantile_95 = 0.0;
  bool converged = false;
  bool rank_deficient = false;

  double ci95_halfwidth(int i) const {
    return t_quantile_95 * standard_errors(i);
  }
};

inline double students_t_quantile_975(int degrees_of_freedom) {
  if (degrees_of_freedom < 1) {
    throw std::invalid_argument(
        "students_t_quantile_975: need at least one degree of freedom");
  }
  const boost::math::students_t_distribution<double> dist(degrees_of_freedom);
  return boost::math::quantile(dist, 0.975);
}

// Model contract: model(p, residuals, jacobian) fills `residuals` (length
// n_residuals) and, when `jacobian` is non-null, the n_residuals x n_params
// Jacobian of the residuals.
template <typename Model>
FitResult fit_least_squares(Model&& model, const Eigen::VectorXd& initial,
                            int n_residuals, const FitOptions& opts = {}) {
  const int n_params = static_cast<int>(initial.size());
  if (n_params < 1) {
    throw std::invalid_argument("fit_least_squares: no parameters");
  }
  if (n_residuals <= n_params) {
    throw std::invalid_argument(
        "fit_least_squares: need more residuals than parameters");
  }

  Eigen::VectorXd p = initial;
  Eigen::VectorXd residuals(n_residuals);
  Eigen::MatrixXd jacobian(n_residuals, n_params);
  Eigen::VectorXd trial_residuals(n_residuals);

  model(p, residuals, &jacobian);
  double rss = residuals.squaredNorm();

  FitResult result;
  double damping = opts.initial_damping;
  for (int iteration = 0; iteration < opts.max_iterations; ++iteration) {
    result.iterations = iteration + 1;

    const Eigen::MatrixXd normal = jacobian.transpose() * jacobian;
    const Eigen::VectorXd gradient = jacobian.transpose() * residuals;
    Eigen::MatrixXd damped = normal;
    for (int i = 0; i < n_params; ++i) {
      // Keep the system solvable even when a parameter has (locally) no
      // influence on the residuals.
      const double diag = std::max(normal(i, i), 1e-300);
      damped(i, i) = diag * (1.0 + damping);
    }
    const Eigen::VectorXd step = damped.ldlt().solve(-gradient);
    if (!step.allFinite()) {
      break;
    }

    const Eigen::VectorXd trial = p + step;
    model(trial, trial_residuals, nullptr);
    const double trial_rss = trial_residuals.squaredNorm();

    if (trial_rss <= rss) {
      double max_relative_step = 0.0;
      for (int i = 0; i < n_params; ++i) {
        max_relative_step =
            std::max(max_relative_step,
                     std::abs(step(i)) / (std::abs(p(i)) + 1e-12));
      }
      p = trial;
      rss = trial_rss;
      model(p, residuals, &jacobian);
      damping = std::max(damping / 3.0, 1e-12);
      if (max_relative_step < opts.relative_step_tolerance) {
        result.converged = true;
        break;
      }
    } else {
      damping *= 10.0;
      if (damping > opts.max_damping) {
        break;
      }
    }
  }

  result.parameters = p;
  result.rss = rss;
  result.degrees_of_freedom = n_residuals - n_params;
  result.t_quantile_95 = students_t_quantile_975(result.degrees_of_freedom);

  // Undamped covariance at the optimum.  A rank-deficient Jacobian means at
  // least one parameter direction leaves the residuals unchanged, so the
  // covariance is unreliable for it; flag that instead of silently reporting
  // a pseudo-inverse variance.
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(jacobian);
  if (qr.rank() < n_params) {
    result.rank_deficient = true;
  }
  const Eigen::MatrixXd normal = jacobian.transpose() * jacobian;
  const double sigma_sq = rss / result.degrees_of_freedom;
  const Eigen::MatrixXd identity =
      Eigen::MatrixXd::Identity(n_params, n_params);
  const auto ldlt = normal.ldlt();
  result.covariance = sigma_sq * ldlt.solve(identity);
  result.standard_errors.resize(n_params);
  for (int i = 0; i < n_params; ++i) {
    const double var = result.covariance(i, i);
    if (!std::isfinite(var) || var < 0.0) {
      result.rank_deficient = true;
      result.standard_errors(i) = std::numeric_limits<double>::quiet_NaN();
    } else {
      result.standard_errors(i) = std::sqrt(var);
    }
  }
  if (ldlt.info() != Eigen::Success) {
    result.rank_deficient = true;
  }
  return result;
}

// Central finite-difference Jacobian of a model, for validating analytic
// Jacobians in tests and user-defined models.
template <typename Model>
Eigen::MatrixXd finite_difference_jacobian(Model&& model,
                                           const Eigen::VectorXd& p,
                                           int n_residuals) {
  const int n_params = static_cast<int>(p.size());
  Eigen::MatrixXd jacobian(n_residuals, n_params);
  Eigen::VectorXd forward(n_residuals), backward(n_residuals);
  for (int j = 0; j < n_params; ++j) {
    const double h = std::max(1e-7 * std::abs(p(j)), 1e-9);
    Eigen::VectorXd shifted = p;
    shifted(j) = p(j) + h;
    model(shifted, forward, nullptr);
    shifted(j) = p(j) - h;
    model(shifted, backward, nullptr);
    jacobian.col(j) = (forward - backward) / (2.0 * h);
  }
  return jacobian;
}

}  // namespace sqz
