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

#include "sqz/gaussian.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

namespace {

using namespace sqz;

// Applies `count` random unitary Gaussian operations drawn from a seeded
// engine.  Used by the property tests below.
void apply_random_circuit(GaussianState& state, std::mt19937_64& engine,
                          int count, bool include_squeezers) {
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  std::uniform_real_distribution<double> ratio(0.0, 1.0);
  std::uniform_real_distribution<double> strength(0.0, 1.2);
  std::uniform_int_distribution<int> mode(0, state.n_modes() - 1);
  std::uniform_int_distribution<int> kind(0, include_squeezers ? 2 : 1);
  for (int i = 0; i < count; ++i) {
    switch (kind(engine)) {
      case 0:
        phase_shift(state, mode(engine), angle(engine));
        break;
      case 1: {
        int a = mode(engine), b = mode(engine);
        if (a == b) b = (b + 1) % state.n_modes();
        beamsplitter(state, a, b, ratio(engine));
        break;
      }
      default:
        squeeze(state, mode(engine), strength(engine), angle(engine));
        break;
    }
  }
}

TEST_CASE("vacuum state is identity covariance with zero mean") {
  const GaussianState s = vacuum(3);
  REQUIRE(s.n_modes() == 3);
  CHECK(s.mean.isZero(0.0));
  CHECK((s.cov - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK_THROWS_AS(vacuum(0), std::invalid_argument);
}

TEST_CASE("squeezed vacuum variance profile") {
  const double r = 0.37229;
  const double angle = 0.3;
  GaussianState s = vacuum(1);
  squeeze(s, 0, r, angle);

  // Frozen closed-form values for e^{-2r} at r = 0.37229.
  CHECK_THAT(quadrature_variance(s, 0, angle),
             Catch::Matchers::WithinAbs(0.47493373022331503, 1e-14));
  CHECK_THAT(quadrature_variance(s, 0, angle + kPi / 2),
             Catch::Matchers::WithinAbs(std::exp(2.0 * r), 1e-13));
  // Equal mixture of both principal quadratures at 45 degrees.
  CHECK_THAT(quadrature_variance(s, 0, angle + kPi / 4),
             Catch::Matchers::WithinAbs(1.2902453227817388, 1e-13));
  // The profile is pi-periodic.
  CHECK_THAT(quadrature_variance(s, 0, angle + kPi),
             Catch::Matchers::WithinAbs(0.47493373022331503, 1e-13));
}

TEST_CASE("phase shift advances the variance profile") {
  GaussianState s = vacuum(1);
  squeeze(s, 0, 0.8, 0.0);
  GaussianState rotated = s;
  const double phi = 0.7312;
  phase_shift(rotated, 0, phi);
  for (double theta : {0.0, 0.4, 1.1, 2.9}) {
    CHECK_THAT(quadrature_variance(rotated, 0, theta),
               Catch::Matchers::WithinRel(
                   quadrature_variance(s, 0, theta - phi), 1e-12));
  }
}

TEST_CASE("loss channel interpolates towards vacuum") {
  const double r = 0.37229, eta = 0.52;
  GaussianState s = vacuum(1);
  squeeze(s, 0, r, 0.0);
  loss(s, 0, eta);

  // eta e^{-2r} + (1 - eta) and eta e^{+2r} + (1 - eta), frozen.
  CHECK_THAT(quadrature_variance(s, 0, 0.0),
             Catch::Matchers::WithinAbs(0.7269655397161239, 1e-14));
  CHECK_THAT(quadrature_variance(s, 0, kPi / 2),
             Catch::Matchers::WithinAbs(1.5748895959768845, 1e-13));
  CHECK_THAT(10.0 * std::log10(quadrature_variance(s, 0, 0.0)),
             Catch::Matchers::WithinAbs(-1.3848617547636863, 1e-12));

  SECTION("composition of two loss channels multiplies transmissivities") {
    GaussianState a = vacuum(2);
    apply_random_circuit(a, *[] {
      static std::mt19937_64 engine(11);
      return &engine;
    }(), 12, true);
    GaussianState b = a;
    loss(a, 1, 0.7);
    loss(a, 1, 0.43);
    loss(b, 1, 0.7 * 0.43);
    CHECK((a.cov - b.cov).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((a.mean - b.mean).cwiseAbs().maxCoeff() < 1e-12);
  }

  SECTION("full loss returns the mode to vacuum") {
    GaussianState a = vacuum(1);
    squeeze(a, 0, 1.0, 0.4);
    loss(a, 0, 0.0);
    CHECK((a.cov - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <
          1e-15);
  }

  SECTION("parameter domain is validated") {
    GaussianState a = vacuum(1);
    CHECK_THROWS_AS(loss(a, 0, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(loss(a, 0, 1.1), std::invalid_argument);
    CHECK_THROWS_AS(loss(a, 2, 0.5), std::out_of_range);
  }
}

TEST_CASE("balanced beamsplitter symmetrises orthogonal squeezers") {
  // x-squeezed (x) p-squeezed with equal r through a 50:50 splitter gives two
  // outputs whose variance is cosh(2r) at every angle.
  const double r = 0.36063;
  GaussianState s = vacuum(2);
  squeeze(s, 0, r, 0.0);
  squeeze(s, 1, r, kPi / 2);
  beamsplitter(s, 0, 1, 0.5);
  for (int mode : {0, 1}) {
    for (double theta : {0.0, 0.5, 1.3, 2.2}) {
      CHECK_THAT(quadrature_variance(s, mode, theta),
                 Catch::Matchers::WithinAbs(1.271581381161355, 1e-12));
    }
  }
}

TEST_CASE("two-mode squeezed pair shows joint squeezing") {
  const double r = 0.36063, eta = 0.45643;
  GaussianState s = vacuum(2);
  squeeze(s, 0, r, 0.0);
  squeeze(s, 1, r, kPi / 2);
  beamsplitter(s, 0, 1, 0.5);
  loss(s, 0, eta);
  loss(s, 1, eta);

  // Optimal joint quadratures: eta e^{-2r} + 1 - eta, frozen.
  const double best = 0.7654585763724285;
  const double worst = 1.4824572032345258;
  CHECK_THAT(joint_quadrature_variance(s, 0, 1, 0.0, 0.0, CombineSign::minus),
             Catch::Matchers::WithinAbs(best, 1e-14));
  CHECK_THAT(
      joint_quadrature_variance(s, 0, 1, kPi / 2, kPi / 2, CombineSign::plus),
      Catch::Matchers::WithinAbs(best, 1e-14));
  // The opposite sign choices are anti-squeezed.
  CHECK_THAT(joint_quadrature_variance(s, 0, 1, 0.0, 0.0, CombineSign::plus),
             Catch::Matchers::WithinAbs(worst, 1e-13));
  CHECK_THAT(
      joint_quadrature_variance(s, 0, 1, kPi / 2, kPi / 2, CombineSign::minus),
      Catch::Matchers::WithinAbs(worst, 1e-13));
  // Each arm alone is thermal: variance above shot noise at every angle.
  for (double theta : {0.0, 0.7, 1.9}) {
    CHECK(quadrature_variance(s, 0, theta) > 1.0);
  }
}

TEST_CASE("symplectic builders satisfy S Omega S^T = Omega") {
  CHECK(symplectic_defect(squeeze_symplectic(0.9, 0.37)) < 1e-12);
  CHECK(symplectic_defect(phase_shift_symplectic(2.1)) < 1e-12);
  CHECK(symplectic_defect(beamsplitter_symplectic(0.28)) < 1e-12);

  // Random products stay symplectic.
  std::mt19937_64 engine(7);
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  std::uniform_real_distribution<double> ratio(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::Matrix4d product = Eigen::Matrix4d::Identity();
    for (int i = 0; i < 6; ++i) {
      Eigen::Matrix4d step = Eigen::Matrix4d::Identity();
      switch (trial % 3) {
        case 0:
          step = beamsplitter_symplectic(ratio(engine));
          break;
        case 1:
          step.topLeftCorner<2, 2>() =
              squeeze_symplectic(ratio(engine), angle(engine));
          break;
        default:
          step.bottomRightCorner<2, 2>() = phase_shift_symplectic(angle(engine));
          break;
      }
      product = step * product;
    }
    CHECK(symplectic_defect(product) < 1e-10);
  }
}

TEST_CASE("general symplectic route agrees with the in-place kernels") {
  std::mt19937_64 engine(23);
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  std::uniform_real_distribution<double> ratio(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    GaussianState fast = vacuum(3);
    apply_random_circuit(fast, engine, 8, true);
    GaussianState general = fast;

    const double r = ratio(engine), th = angle(engine), sr = ratio(engine);
    squeeze(fast, 1, r, th);
    beamsplitter(fast, 0, 2, sr);

    SymplecticOp sq{squeeze_symplectic(r, th), {1}};
    apply_symplectic(general, sq);
    SymplecticOp bs{beamsplitter_symplectic(sr), {0, 2}};
    apply_symplectic(general, bs);

    CHECK((fast.cov - general.cov).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((fast.mean - general.mean).cwiseAbs().maxCoeff() < 1e-12);
  }

  SECTION("dimension and mode validation") {
    GaussianState s = vacuum(2);
    SymplecticOp bad{beamsplitter_symplectic(0.5), {0}};
    CHECK_THROWS_AS(apply_symplectic(s, bad), std::invalid_argument);
    SymplecticOp repeat{beamsplitter_symplectic(0.5), {1, 1}};
    CHECK_THROWS_AS(apply_symplectic(s, repeat), std::invalid_argument);
  }
}

TEST_CASE("random circuits preserve physicality") {
  std::mt19937_64 engine(101);
  for (int trial = 0; trial < 25; ++trial) {
    GaussianState s = vacuum(3);
    apply_random_circuit(s, engine, 15, true);
    // Sprinkle loss channels in as well.
    std::uniform_real_distribution<double> eta(0.1, 1.0);
    loss(s, trial % 3, eta(engine));

    // Uncertainty relation: cov + i Omega >= 0 up to numerical noise.
    CHECK(uncertainty_min_eigenvalue(s) > -1e-9);
    // Covariance stays symmetric.
    CHECK((s.cov - s.cov.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("passive circuits leave the vacuum invariant") {
  std::mt19937_64 engine(303);
  for (int trial = 0; trial < 25; ++trial) {
    GaussianState s = vacuum(3);
    apply_random_circuit(s, engine, 20, /*include_squeezers=*/false);
    CHECK((s.cov - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() <
          1e-10);
    CHECK(s.mean.cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("passive circuits preserve total photon number") {
  std::mt19937_64 engine(404);
  for (int trial = 0; trial < 15; ++trial) {
    GaussianState s = vacuum(3);
    squeeze(s, 0, 0.9, 0.2);
    squeeze(s, 1, 0.4, 1.1);
    const double before = s.cov.trace();
    const double photons_before = mean_photon_number(s);
    apply_random_circuit(s, engine, 20, /*include_squeezers=*/false);
    CHECK_THAT(s.cov.trace(), Catch::Matchers::WithinAbs(before, 1e-10));
    CHECK_THAT(mean_photon_number(s),
               Catch::Matchers::WithinAbs(photons_before, 1e-10));
  }

  SECTION("squeezer photon number is sinh^2 r") {
    GaussianState s = vacuum(1);
    const double r = 0.6;
    squeeze(s, 0, r, 1.0);
    CHECK_THAT(mean_photon_number(s),
               Catch::Matchers::WithinAbs(std::sinh(r) * std::sinh(r), 1e-12));
  }
}

TEST_CASE("purity tracks loss") {
  GaussianState s = vacuum(2);
  squeeze(s, 0, 0.7, 0.0);
  beamsplitter(s, 0, 1, 0.3);
  CHECK_THAT(purity(s), Catch::Matchers::WithinAbs(1.0, 1e-12));
  loss(s, 0, 0.6);
  CHECK(purity(s) < 1.0);
}

TEST_CASE("single-mode sampling reproduces mean and variance") {
  GaussianState s = vacuum(1);
  squeeze(s, 0, 0.5, 0.0);
  s.mean(0) = 1.25;

  GaussianSampler rng(42);
  const int n = 200000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = sample_quadrature(s, 0, 0.0, rng);
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  const double expected_var = std::exp(-1.0);
  // 5 sigma statistical gates.
  CHECK(std::abs(mean - 1.25) < 5.0 * std::sqrt(expected_var / n));
  CHECK(std::abs(var - expected_var) <
        5.0 * expected_var * std::sqrt(2.0 / n));
}

TEST_CASE("paired sampling preserves cross-correlations") {
  const double r = 0.5;
  GaussianState s = vacuum(2);
  squeeze(s, 0, r, 0.0);
  squeeze(s, 1, r, kPi / 2);
  beamsplitter(s, 0, 1, 0.5);

  GaussianSampler rng(1234);
  const int n = 200000;
  double sum_sq_minus = 0.0, sum_sq_plus = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto [x1, x2] = sample_quadrature_pair(s, 0, 0.0, 1, 0.0, rng);
    const double minus = (x1 - x2) / std::sqrt(2.0);
    const double plus = (x1 + x2) / std::sqrt(2.0);
    sum_sq_minus += minus * minus;
    sum_sq_plus += plus * plus;
  }
  const double v_minus = sum_sq_minus / n;
  const double v_plus = sum_sq_plus / n;
  const double expect_minus = std::exp(-2.0 * r);
  const double expect_plus = std::exp(2.0 * r);
  CHECK(std::abs(v_minus - expect_minus) <
        5.0 * expect_minus * std::sqrt(2.0 / n));
  CHECK(std::abs(v_plus - expect_plus) <
        5.0 * expect_plus * std::sqrt(2.0 / n));

  SECTION("deterministic given the seed") {
    GaussianSampler a(99), b(99);
    for (int i = 0; i < 50; ++i) {
      const auto pa = sample_quadrature_pair(s, 0, 0.3, 1, 0.9, a);
      const auto pb = sample_quadrature_pair(s, 0, 0.3, 1, 0.9, b);
      CHECK(pa.first == pb.first);
      CHECK(pa.second == pb.second);
    }
  }
}

TEST_CASE("seed derivation separates streams") {
  const std::uint64_t master = 2026;
  CHECK(sqz::derive_seed(master, 0) != sqz::derive_seed(master, 1));
  CHECK(sqz::derive_seed(master, 0) != sqz::derive_seed(master + 1, 0));
  // Stable across calls.
  CHECK(sqz::derive_seed(master, 7) == sqz::derive_seed(master, 7));
}

}  // namespace
