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
#include <random>

#include "test_support.hpp"

namespace et = etaopt;
using et::testing::unit_batch;

TEST(LineSearchTest, QuadraticProbeMinimum) {
  const auto q = et::testing::half_square();
  const auto b = unit_batch();
  const auto p = et::probe_make(q, {2.0}, {2.0}, b);
  const auto r = et::line_search_oracle(p, 0.0, 2.0, 101);
  EXPECT_NEAR(r.eta_star, 1.0, 1e-6);
  EXPECT_NEAR(r.f_star, 0.0, 1e-12);
  EXPECT_EQ(r.lo, 0.0);
  EXPECT_EQ(r.hi, 2.0);
  EXPECT_EQ(r.points, 101u);
}

TEST(LineSearchTest, OffGridMinimumIsRefined) {
  auto f = [](double eta) { return (eta - 0.3337) * (eta - 0.3337) + 1.0; };
  const auto r = et::line_search_oracle(f, 0.0, 1.0, 11);
  EXPECT_NEAR(r.eta_star, 0.3337, 1e-7);
  for (int i = 0; i <= 10; ++i) EXPECT_LE(r.f_star, f(i / 10.0));
}

TEST(LineSearchTest, ConstantProbeTiesToLowerEnd) {
  const auto q = et::testing::half_square();
  const auto b = unit_batch();
  const auto p = et::probe_make(q, {3.0}, {0.0}, b);
  const auto r = et::line_search_oracle(p, 0.25, 4.0, 16);
  EXPECT_EQ(r.eta_star, 0.25);
  EXPECT_EQ(r.f_star, p(0.25));
}

TEST(LineSearchTest, DivergedPointsAreSkipped) {
  auto f = [](double eta) {
    if (eta > 0.5) throw et::DivergedProbe(eta, INFINITY);
    return (eta - 0.2) * (eta - 0.2);
  };
  EXPECT_NEAR(et::line_search_oracle(f, 0.0, 1.0, 21).eta_star, 0.2, 1e-7);
  auto never = [](double eta) -> double { throw et::DivergedProbe(eta, NAN); };
  EXPECT_THROW(et::line_search_oracle(never, 0.0, 1.0, 5), et::DivergedProbe);
}

TEST(LineSearchTest, RejectsBadGrid) {
  auto f = [](double eta) { return eta; };
  EXPECT_THROW(et::line_search_oracle(f, 1.0, 1.0, 5), et::ContractViolation);
  EXPECT_THROW(et::line_search_oracle(f, 0.0, 1.0, 2), et::ContractViolation);
}

TEST(LineSearchTest, InvariantUnderLossScaling) {
  std::mt19937_64 rng(8);
  const et::Batch b = et::testing::random_class_batch(20, 3, 3, rng);
  const et::LogisticRegressionModel m(3, 3);
  const auto w = et::testing::random_vector(m.param_count(), 0.5, rng);
  const auto g = m.gradient(w, b);
  const auto base = et::line_search_oracle(et::probe_make(m, w, g, b), 0.0, 1.0, 201);
  for (double lambda : {0.01, 3.0, 100.0}) {
    const et::ScaledObjective s(m, lambda);
    const auto r = et::line_search_oracle(et::probe_make(s, w, et::gradient(s, w, b), b), 0.0, 1.0, 201);
    // Scaled g changes the probe direction, so compare on the unscaled one.
    const auto r2 = et::line_search_oracle(et::probe_make(s, w, g, b), 0.0, 1.0, 201);
    EXPECT_NEAR(r2.eta_star, base.eta_star, 1e-7) << lambda;
    EXPECT_NEAR(r2.f_star, lambda * base.f_star, 1e-9 * lambda * base.f_star) << lambda;
    EXPECT_GT(r.f_star, 0.0);
  }
}

// Minibatches of the shipped MNIST-subset split at the zero start, sum-form
// loss and default stencil width. One Newton step lands within 10% of the
// dense optimum on the first batch; on later batches the probe is less
// quadratic, so only the direction of the move is asserted there.
TEST(LineSearchTest, LogisticNewtonTracksOracle) {
  const auto ds = et::load_idx(et::testing::data_dir() / "mnist5k-images-idx3-ubyte",
                               et::testing::data_dir() / "mnist5k-labels-idx1-ubyte");
  const auto sp = et::split(ds, {4000, 1000, 0, 11});
  const auto batches = et::BatchIterator(sp.train, 32, 3).epoch(0);
  const et::LogisticRegressionModel m(784, 10);
  et::HyperParams h;
  h.eta_init = 1e-2;
  for (std::size_t k = 0; k < 5; ++k) {
    const auto& b = batches[k];
    const auto w = m.initial_weights();
    const auto p = et::probe_make(m, w, m.gradient(w, b), b);
    const auto s = et::stencil_collect(p, h.eta_init, h.eps_fd);
    ASSERT_GT(et::fd_second(s), 0.0);
    ASSERT_GT(s.f_p2 + s.f_m2 - 2 * s.f_0, h.delta_smooth);
    auto state = et::OptimizerState::start(w, h);
    et::step_second_order(state, m, b);
    const auto oracle = et::line_search_oracle(p, 0.0, 1.0, 1001);
    EXPECT_LT(std::abs(state.eta - oracle.eta_star), std::abs(h.eta_init - oracle.eta_star)) << "batch " << k;
    if (k == 0) {
      EXPECT_LE(std::abs(state.eta - oracle.eta_star) / oracle.eta_star, 0.1);
    }
  }
}

// Central differences are exact on quadratics for every h; a wide step keeps
// the rounding term u |L| / h far below the bound.
TEST(GradCheckTest, QuadraticIsExact) {
  const auto q = et::testing::half_square();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> wd(-10.0, 10.0);
  for (int k = 0; k < 50; ++k) {
    const auto r = et::gradcheck(q, {wd(rng)}, unit_batch(), 1e-2);
    EXPECT_LE(r.max_rel_error, 1e-10);
    EXPECT_GE(r.max_rel_error, 0.0);
  }
  const auto q4 = et::QuadraticObjective::isotropic(4, 1.0);
  const auto r = et::gradcheck(q4, {1.0, -2.0, 0.5, 3.0}, unit_batch(), 1e-6);
  EXPECT_EQ(r.h_used, 1e-6);
  EXPECT_LE(r.max_rel_error, 1e-9);
}

TEST(GradCheckTest, LinearRegressionRandomPoint) {
  std::mt19937_64 rng(10);
  const et::Batch b = et::testing::random_regression_batch(20, 4, rng);
  const et::LinearRegressionModel m(4);
  EXPECT_LE(et::gradcheck(m, et::testing::random_vector(5, 1.0, rng), b, 1e-6).max_rel_error, 1e-4);
}

TEST(GradCheckTest, MlpWithKinkGuard) {
  std::mt19937_64 rng(11);
  const et::Batch b = et::testing::random_class_batch(10, 4, 3, rng);
  const et::MlpModel m({4, 8, 3}, 5);
  auto w = m.initial_weights();
  const auto noise = et::testing::random_vector(w.size(), 0.05, rng);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] += noise[i];
  const auto r = et::gradcheck(m, w, b, 1e-6);
  EXPECT_LE(r.max_rel_error, 1e-3);
  EXPECT_GE(m.kink_margin(r.point, b), 1e-4);
}

TEST(GradCheckTest, KinkIsResampled) {
  // Zero first-layer weights and biases put every hidden pre-activation on a kink.
  const et::Batch b(et::Matrix(2, 2, std::vector<double>{1, 2, -1, 0.5}), {0.0, 1.0});
  const et::MlpModel m({2, 3, 2}, 1);
  const et::ParamVector w(m.param_count(), 0.0);
  EXPECT_EQ(m.kink_margin(w, b), 0.0);
  const auto r = et::gradcheck(m, w, b, 1e-6);
  EXPECT_GE(r.resamples, 1u);
  EXPECT_LE(r.max_rel_error, 1e-3);
}

TEST(GradCheckTest, DetectsWrongGradient) {
  struct Wrong {
    std::size_t param_count() const { return 2; }
    double loss(const et::ParamVector& w, const et::Batch&) const { return w[0] * w[0] + w[1]; }
    et::ParamVector gradient(const et::ParamVector& w, const et::Batch&) const { return {2 * w[0], 2.0}; }
  } bad;
  const auto r = et::gradcheck(bad, {1.0, 1.0}, unit_batch(), 1e-6);
  EXPECT_EQ(r.worst_coordinate, 1u);
  EXPECT_NEAR(r.max_rel_error, 0.5, 1e-6);
}

TEST(GradCheckTest, RejectsNonPositiveStep) {
  const auto q = et::testing::half_square();
  EXPECT_THROW(et::gradcheck(q, {1.0}, unit_batch(), 0.0), et::ContractViolation);
}
