// Copyright 2026 The etaopt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "test_support.hpp"

namespace et = etaopt;
using et::testing::unit_batch;

namespace {

constexpr double kU = std::numeric_limits<double>::epsilon();

/// f(eta) = 2 (1 - eta)^2 from 1/2 w^2 at w = 2, g = 2.
struct QuadraticProbeFixture : ::testing::Test {
  et::QuadraticObjective q = et::testing::half_square();
  et::Batch b = unit_batch();
  et::EtaProbe<et::QuadraticObjective> p = et::probe_make(q, {2.0}, {2.0}, b);
};

}  // namespace

TEST_F(QuadraticProbeFixture, EvaluatesSubstitutedQuadratic) {
  EXPECT_EQ(et::probe_eval(p, 0.0), 2.0);
  EXPECT_EQ(et::probe_eval(p, 1.0), 0.0);
  EXPECT_EQ(et::probe_eval(p, 0.5), 0.5);
  EXPECT_EQ(p(-1.0), 8.0);
}

TEST_F(QuadraticProbeFixture, StencilAtZero) {
  const auto s = et::stencil_collect(p, 0.0, 0.1);
  EXPECT_NEAR(s.f_m2, 2.88, 1e-12);
  EXPECT_NEAR(s.f_m1, 2.42, 1e-12);
  EXPECT_EQ(s.f_0, 2.0);
  EXPECT_NEAR(s.f_p1, 1.62, 1e-12);
  EXPECT_NEAR(s.f_p2, 1.28, 1e-12);
  EXPECT_EQ(s.center, 0.0);
  EXPECT_EQ(s.eps, 0.1);
  EXPECT_TRUE(s.valid());
  EXPECT_NEAR(et::fd_first(s), -4.0, 1e-12);
  EXPECT_NEAR(et::fd_second(s), 4.0, 1e-12);
}

TEST_F(QuadraticProbeFixture, AnalyticDerivativeByHand) {
  EXPECT_EQ(et::analytic_fprime(q, {2.0}, {2.0}, b, 0.0), -4.0);
  EXPECT_EQ(et::analytic_fprime(p, 0.5), -2.0);
}

TEST_F(QuadraticProbeFixture, NonPositiveEpsIsRejected) {
  EXPECT_THROW(et::stencil_collect(p, 0.0, 0.0), et::ContractViolation);
  EXPECT_THROW(et::stencil_collect(p, 0.0, -1e-5), et::ContractViolation);
}

TEST(ProbeTest, StencilOrderIsFixed) {
  std::vector<double> seen;
  auto f = [&](double eta) {
    seen.push_back(eta);
    return eta;
  };
  et::stencil_collect(f, 1.0, 0.25);
  EXPECT_EQ(seen, (std::vector<double>{0.5, 0.75, 1.0, 1.25, 1.5}));
}

TEST(ProbeTest, ZeroDirectionIsConstant) {
  const auto q = et::testing::half_square();
  const auto b = unit_batch();
  const auto p = et::probe_make(q, {3.0}, {0.0}, b);
  for (double eta : {-5.0, 0.0, 0.3, 100.0}) EXPECT_EQ(p(eta), 4.5);
  const auto s = et::stencil_collect(p, 0.7, 0.01);
  EXPECT_EQ(s.f_m2, s.f_p2);
  EXPECT_EQ(s.f_m1, s.f_0);
  EXPECT_EQ(s.f_p1, s.f_0);
  EXPECT_EQ(et::fd_first(s), 0.0);
  EXPECT_EQ(et::fd_second(s), 0.0);
  EXPECT_EQ(et::analytic_fprime(p, 0.3), 0.0);
}

TEST(ProbeTest, CubicStencil) {
  auto cube = [](double eta) { return eta * eta * eta; };
  const auto s = et::stencil_collect(cube, 1.0, 0.1);
  EXPECT_NEAR(et::fd_first(s), 3.01, 1e-12);
  EXPECT_NEAR(et::fd_second(s), 6.0, 1e-9);
}

TEST(ProbeTest, LengthMismatchIsContractViolation) {
  const auto q = et::QuadraticObjective::isotropic(2);
  const auto b = unit_batch();
  EXPECT_THROW(et::probe_make(q, {1.0}, {1.0, 1.0}, b), et::ContractViolation);
  EXPECT_THROW(et::probe_make(q, {1.0, 1.0}, {1.0}, b), et::ContractViolation);
}

TEST(ProbeTest, OverflowRaisesDivergedProbeWithEta) {
  const et::LinearRegressionModel m(1);
  const et::Batch b(et::Matrix(1, 1, std::vector<double>{1.0}), {1.0});
  const auto p = et::probe_make(m, {0.0, 0.0}, {1e200, 1e200}, b);
  try {
    (void)p(1e200);
    FAIL() << "expected DivergedProbe";
  } catch (const et::DivergedProbe& e) {
    EXPECT_EQ(e.eta(), 1e200);
    EXPECT_FALSE(std::isfinite(e.value()));
  }
  EXPECT_THROW(et::stencil_collect(p, 1e200, 1.0), et::DivergedProbe);
}

TEST(ProbeTest, LogisticProbeAtZeroIsCurrentLoss) {
  std::mt19937_64 rng(3);
  const et::Batch b = et::testing::random_class_batch(20, 5, 4, rng);
  const et::LogisticRegressionModel m(5, 4);
  const auto w = et::testing::random_vector(m.param_count(), 0.3, rng);
  const auto p = et::probe_make(m, w, m.gradient(w, b), b);
  EXPECT_EQ(p(0.0), m.loss(w, b));
}

TEST(ProbeTest, LogisticStencilValuesAreClose) {
  std::mt19937_64 rng(4);
  const et::Batch b = et::testing::random_class_batch(32, 6, 3, rng);
  const et::LogisticRegressionModel m(6, 3, et::Reduction::mean);
  const auto w = m.initial_weights();
  const auto p = et::probe_make(m, w, m.gradient(w, b), b);
  const auto s = et::stencil_collect(p, 0.4, 1e-5);
  const double vals[] = {s.f_m2, s.f_m1, s.f_0, s.f_p1, s.f_p2};
  // Direct evaluation at the stencil offsets.
  const double offs[] = {-2e-5, -1e-5, 0.0, 1e-5, 2e-5};
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(vals[i], m.loss(et::step_along(w, m.gradient(w, b), 0.4 + offs[i]), b));
    for (int j = 0; j < 5; ++j) EXPECT_LE(std::abs(vals[i] - vals[j]), 1e-3);
  }
}

TEST(ProbeTest, BostonAnalyticMatchesFiniteDifference) {
  const et::Dataset ds = et::load_csv(et::testing::data_dir() / "boston.csv", "MEDV");
  const et::Splits s = et::split(ds, {400, 106, 0, 0, false});
  const et::Batch b = s.train.to_batch();
  const et::LinearRegressionModel m(13);
  const auto w = m.initial_weights();
  const auto p = et::probe_make(m, w, m.gradient(w, b), b);
  const double analytic = et::analytic_fprime(p, 1e-7);
  const double fd = et::fd_first(et::stencil_collect(p, 1e-7, 1e-5));
  EXPECT_LE(std::abs(fd - analytic) / std::abs(analytic), 1e-4);
}

TEST(ProbePurityTest, StencilLeavesStateBitwiseUnchanged) {
  std::mt19937_64 rng(6);
  const et::Batch b = et::testing::random_class_batch(16, 4, 3, rng);
  const et::MlpModel m({4, 7, 3}, 2);
  et::HyperParams h;
  auto state = et::OptimizerState::start(m.initial_weights(), h);
  const auto g = m.gradient(state.w, b);
  const auto w_before = state.w;
  const auto g_before = g;
  const auto init_before = m.initial_weights();
  const auto rng_probe = rng;
  const auto p = et::probe_make(m, state.w, g, b);
  for (int k = 0; k < 10; ++k) {
    (void)et::stencil_collect(p, 0.01 * k + 1e-3, 1e-5);
    (void)et::probe_eval(p, -0.5 * k);
  }
  EXPECT_EQ(state.w, w_before);
  EXPECT_EQ(g, g_before);
  EXPECT_EQ(p.weights(), w_before);
  EXPECT_EQ(p.direction(), g_before);
  EXPECT_EQ(m.initial_weights(), init_before);
  EXPECT_EQ(state.eta, h.eta_init);
  EXPECT_EQ(state.t, 0u);
  EXPECT_TRUE(rng == rng_probe);
}

// Dyadic data keeps every intermediate exactly representable, so the
// central differences must reproduce f' and f'' exactly.
TEST(ProbeExactnessTest, DyadicQuadraticsAreExact) {
  std::mt19937_64 rng(10);
  std::uniform_int_distribution<int> small(-4, 4), diag(1, 6), len(1, 5), k_eps(4, 19);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = static_cast<std::size_t>(len(rng));
    et::Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      a(i, i) = 8.0 + diag(rng);
      for (std::size_t j = 0; j < i; ++j) a(i, j) = a(j, i) = small(rng) / 4.0;
    }
    std::vector<double> bvec(n), w(n), g(n);
    for (std::size_t i = 0; i < n; ++i) {
      bvec[i] = small(rng);
      w[i] = small(rng) / 2.0;
      g[i] = small(rng) / 2.0;
    }
    const et::QuadraticObjective q(a, bvec);
    const auto batch = unit_batch();
    const auto p = et::probe_make(q, w, g, batch);
    const double eps = std::ldexp(1.0, -k_eps(rng));
    const double eta = 3 * eps * small(rng);
    const auto s = et::stencil_collect(p, eta, eps);
    double gag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) gag += g[i] * a(i, j) * g[j];
    }
    const double fprime = et::analytic_fprime(p, eta);
    EXPECT_EQ(et::fd_first(s), fprime) << "trial " << trial;
    EXPECT_EQ(et::fd_second(s), gag) << "trial " << trial;
  }
}

// Generic SPD quadratics over eps in [1e-6, 1e-1]: agreement to 1e-9 relative
// plus the cancellation error of the difference quotients in doubles.
TEST(ProbeExactnessTest, RandomSpdQuadraticsAgreeUpToRounding) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> dim(1, 5);
  std::uniform_real_distribution<double> log_eps(-6.0, -1.0), eta_dist(-1.0, 2.0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = dim(rng);
    const et::Matrix a = et::testing::random_spd(n, 0.1, 10.0, rng);
    const et::QuadraticObjective q(a, et::testing::random_vector(n, 1.0, rng));
    const auto w = et::testing::random_vector(n, 1.0, rng);
    const auto batch = unit_batch();
    const auto g = q.gradient(w, batch);
    const auto p = et::probe_make(q, w, g, batch);
    const double eps = std::pow(10.0, log_eps(rng));
    const double eta = eta_dist(rng);
    const auto s = et::stencil_collect(p, eta, eps);
    double gag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) gag += g[i] * a(i, j) * g[j];
    }
    const double fprime = et::analytic_fprime(p, eta);
    // Magnitude of the terms summed inside one loss evaluation.
    const auto v = et::step_along(w, g, eta);
    double fmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) fmax += 0.5 * std::abs(v[i] * a(i, j) * v[j]);
      fmax += std::abs(q.linear()[i] * v[i]);
    }
    const double round1 = 8 * kU * fmax / eps;
    const double round2 = 16 * kU * fmax / (eps * eps);
    EXPECT_LE(std::abs(et::fd_first(s) - fprime), 1e-9 * std::abs(fprime) + round1)
        << "trial " << trial << " eps " << eps;
    EXPECT_LE(std::abs(et::fd_second(s) - gag), 1e-9 * gag + round2)
        << "trial " << trial << " eps " << eps;
    if (eps >= 1e-3) {
      EXPECT_LE(std::abs(et::fd_second(s) - gag), 1e-9 * gag + 1e-9 * fmax) << "trial " << trial;
    }
  }
}

TEST(ProbeAgreementTest, SmoothModelsAgreeAtDefaultEps) {
  std::mt19937_64 rng(12);
  for (int k = 0; k < 30; ++k) {
    const et::Batch reg = et::testing::random_regression_batch(16, 3, rng);
    const et::LinearRegressionModel lin(3, et::Reduction::mean);
    auto w = et::testing::random_vector(lin.param_count(), 1.0, rng);
    auto p1 = et::probe_make(lin, w, lin.gradient(w, reg), reg);
    const double eta = 0.05 * (k % 5 + 1);
    double a = et::analytic_fprime(p1, eta);
    EXPECT_LE(std::abs(et::fd_first(et::stencil_collect(p1, eta, 1e-5)) - a) / std::max(1.0, std::abs(a)),
              1e-3);

    const et::Batch cls = et::testing::random_class_batch(16, 3, 4, rng);
    const et::LogisticRegressionModel log(3, 4, et::Reduction::mean);
    w = et::testing::random_vector(log.param_count(), 1.0, rng);
    auto p2 = et::probe_make(log, w, log.gradient(w, cls), cls);
    a = et::analytic_fprime(p2, eta);
    EXPECT_LE(std::abs(et::fd_first(et::stencil_collect(p2, eta, 1e-5)) - a) / std::max(1.0, std::abs(a)),
              1e-3);
  }
}

TEST(ProbeScaleTest, ScalingLossesScalesDerivativesAndKeepsRatio) {
  auto f = [](double eta) { return std::exp(eta) + 3 * eta * eta; };
  const auto s = et::stencil_collect(f, 0.3, 1e-3);
  for (double lambda : {0.01, 7.0, 100.0}) {
    et::StencilSample t = s;
    for (double* v : {&t.f_m2, &t.f_m1, &t.f_0, &t.f_p1, &t.f_p2}) *v *= lambda;
    EXPECT_NEAR(et::fd_first(t), lambda * et::fd_first(s), 1e-9 * std::abs(lambda * et::fd_first(s)));
    EXPECT_NEAR(et::fd_second(t), lambda * et::fd_second(s), 1e-6 * std::abs(lambda * et::fd_second(s)));
    EXPECT_NEAR(et::fd_first(t) / et::fd_second(t), et::fd_first(s) / et::fd_second(s), 1e-6);
  }
}
