// Copyright (c) 2026, DISAM contributors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "disam/diagnostics.hpp"
#include "disam/problems.hpp"
#include "disam/verify.hpp"
#include "test_support.hpp"

namespace disam {
namespace {

TEST(SharpnessAscent, HandExamples) {
  const auto q = testing::quad_1d({0.0}, {1.0});
  const auto at_min = estimate_sharpness_ascent(q, ParamVector{0.0}, {}, 0.1);
  EXPECT_EQ(at_min.value, 0.0);
  EXPECT_TRUE(at_min.degenerate);
  const auto s = estimate_sharpness_ascent(q, ParamVector{1.0}, {}, 0.1);
  EXPECT_NEAR(s.value, 0.105, 1e-15);
  EXPECT_FALSE(s.degenerate);
}

TEST(SharpnessAscent, WithinTenPercentOfMonteCarlo) {
  const double curv[] = {4.0, 1.0};
  const QuadraticDomains q({QuadraticDomains::diagonal({0.5, -0.2}, curv)});
  CounterRng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const double angle = rng.uniform(0.0, 6.283185307179586);
    const ParamVector w{0.5 + std::cos(angle), -0.2 + std::sin(angle)};
    const double rho = 0.01;
    const double est = estimate_sharpness_ascent(q, w, {}, rho).value;
    const double mc = verify::monte_carlo_sharpness([&](const ParamVector& x) { return q.eval(x).total; }, w, rho,
                                                    1000, 100 + trial);
    EXPECT_NEAR(est, mc, 0.1 * mc);
  }
}

TEST(SharpnessAscent, QuadraticInRhoNearMinimum) {
  const double curv[] = {3.0, 1.0};
  const QuadraticDomains q({QuadraticDomains::diagonal({0.0, 0.0}, curv)});
  const ParamVector w{1e-6, 1e-6};
  std::vector<double> lx, ly;
  for (double rho = 0.01; rho <= 0.1 + 1e-12; rho += 0.01) {
    const double s = estimate_sharpness_ascent(q, w, {}, rho).value;
    ASSERT_GE(s, 0.0);
    lx.push_back(std::log(rho));
    ly.push_back(std::log(s));
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i], my += ly[i];
  mx /= lx.size();
  my /= ly.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) sxy += (lx[i] - mx) * (ly[i] - my), sxx += (lx[i] - mx) * (lx[i] - mx);
  EXPECT_NEAR(sxy / sxx, 2.0, 0.1);
}

TEST(GradientVariance, Examples) {
  const std::vector<ParamVector> g{ParamVector{1.0, 0.0}, ParamVector{0.0, 1.0}};
  EXPECT_EQ(gradient_variance(g), 0.5);
  const std::vector<ParamVector> same{ParamVector{0.3, -2.0}, ParamVector{0.3, -2.0}, ParamVector{0.3, -2.0}};
  EXPECT_EQ(gradient_variance(same), 0.0);
  const std::vector<ParamVector> one{ParamVector{1.0}};
  EXPECT_THROW(gradient_variance(one), std::invalid_argument);
}

TEST(GradientVariance, TranslationAndPermutationInvariant) {
  CounterRng rng(32);
  std::vector<ParamVector> g;
  for (int i = 0; i < 6; ++i) g.push_back(testing::random_vector(rng, 5));
  const double base = gradient_variance(g);
  const auto shift = testing::random_vector(rng, 5, 10.0);
  std::vector<ParamVector> moved;
  for (const auto& x : g) moved.push_back(axpy(1.0, shift, x));
  EXPECT_NEAR(gradient_variance(moved), base, 1e-12);
  std::vector<ParamVector> reversed(g.rbegin(), g.rend());
  EXPECT_NEAR(gradient_variance(reversed), base, 1e-15);
}

TEST(GradientVariance, EstimatorOverIdenticalBatchesIsZero) {
  const SoftmaxMLP mlp(2, 4, 3);
  CounterRng rng(33);
  const auto b = testing::random_batch(rng, 12, 2, 3, 2);
  const std::vector<std::vector<Sample>> batches{b, b, b};
  EXPECT_EQ(estimate_sharpness_gradvar(mlp, testing::random_vector(rng, mlp.param_dim()), batches), 0.0);
}

TEST(NormalizeConvergence, Examples) {
  const std::vector<double> s{5.0, 3.0, 1.0};
  const auto n = normalize_convergence(std::span<const double>(s));
  EXPECT_EQ(n.values, (std::vector<double>{1.0, 0.5, 0.0}));
  EXPECT_FALSE(n.degenerate);
  const std::vector<double> flat{2.0, 2.0};
  const auto f = normalize_convergence(std::span<const double>(flat));
  EXPECT_EQ(f.values, (std::vector<double>{0.0, 0.0}));
  EXPECT_TRUE(f.degenerate);
}

TEST(NormalizeConvergence, AffineInvariant) {
  CounterRng rng(34);
  std::vector<double> s(50);
  for (auto& x : s) x = rng.uniform(0.0, 4.0);
  std::vector<double> t(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) t[i] = 3.5 * s[i] - 11.0;
  const auto a = normalize_convergence(std::span<const double>(s));
  const auto b = normalize_convergence(std::span<const double>(t));
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(a.values[i], b.values[i], 1e-12);
  const auto per_domain = normalize_convergence(std::vector<std::vector<double>>{s, t});
  ASSERT_EQ(per_domain.size(), 2u);
  EXPECT_EQ(per_domain[0].values, a.values);
}

TEST(HeldoutEval, InterpolatingModelIsPerfect) {
  const SoftmaxMLP mlp(1, 1, 2);
  const ParamVector w{10.0, 0.0, -10.0, 10.0, 0.0, 0.0};  // W1, b1, W2, b2
  std::vector<Sample> data;
  for (int i = 1; i <= 20; ++i) {
    data.push_back({{0.1 * i}, 1, 3});
    data.push_back({{-0.1 * i}, 0, 3});
  }
  const auto m = heldout_domain_eval(mlp, w, data);
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_LT(m.loss, 0.2);
  EXPECT_EQ(heldout_domain_eval(mlp, w, data).loss, m.loss);
}

TEST(HeldoutEval, RandomLabelsNearChance) {
  const SoftmaxMLP mlp(2, 8, 3);
  CounterRng rng(35);
  const auto data = testing::random_batch(rng, 1000, 2, 3, 1);
  const auto m = heldout_domain_eval(mlp, testing::random_vector(rng, mlp.param_dim()), data);
  const double p = 1.0 / 3.0;
  EXPECT_NEAR(m.accuracy, p, 3.0 * std::sqrt(p * (1 - p) / 1000));
}

TEST(HeldoutEval, EmptyThrows) {
  const SoftmaxMLP mlp(2, 4, 3);
  EXPECT_THROW(heldout_domain_eval(mlp, ParamVector(mlp.param_dim()), Batch{}), ConfigError);
}

TEST(Trace, ValidateAndMedianPhi) {
  TrainingTrace t;
  for (int i = 1; i <= 4; ++i) {
    StepRecord r;
    r.t = i;
    if (i > 1) r.phi = 0.1 * i;
    t.steps.push_back(r);
  }
  EXPECT_NO_THROW(validate(t));
  EXPECT_NEAR(*median_phi(t, 0), 0.3, 1e-15);
  EXPECT_NEAR(*median_phi(t, 2), 0.35, 1e-15);
  EXPECT_FALSE(median_phi(t, 4));
  t.steps[2].t = 7;
  EXPECT_THROW(validate(t), std::logic_error);
}

TEST(Median, EvenAndOdd) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
}

}  // namespace
}  // namespace disam
