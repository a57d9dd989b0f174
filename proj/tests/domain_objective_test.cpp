// Copyright (c) 2026, DISAM contributors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "disam/domain_objective.hpp"
#include "disam/problems.hpp"
#include "disam/verify.hpp"
#include "test_support.hpp"

namespace disam {
namespace {

DomainLossReport make_report(std::vector<double> losses, std::vector<std::size_t> counts,
                             std::vector<ParamVector> grads) {
  DomainLossReport r;
  for (std::size_t i = 0; i < losses.size(); ++i) r.present_domains.push_back(static_cast<int>(i));
  r.counts = std::move(counts);
  r.losses = std::move(losses);
  r.grads = std::move(grads);
  finalize_weights(r);
  return r;
}

DomainLossReport random_report(CounterRng& rng, std::size_t m, std::size_t k) {
  std::vector<double> losses(m);
  std::vector<std::size_t> counts(m);
  std::vector<ParamVector> grads;
  for (std::size_t i = 0; i < m; ++i) {
    losses[i] = rng.uniform(0.0, 3.0);
    counts[i] = 1 + rng.uniform_index(50);
    grads.push_back(testing::random_vector(rng, k, 2.0));
  }
  return make_report(losses, counts, grads);
}

TEST(DomainVariance, Examples) {
  const std::vector<double> equal{2.5, 2.5, 2.5};
  EXPECT_EQ(domain_variance(equal), 0.0);
  const std::vector<double> pair{1.0, 3.0};
  EXPECT_EQ(domain_variance(pair), 1.0);
}

TEST(DomainVariance, MatchesMomentFormula) {
  CounterRng rng(10);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> l(1 + rng.uniform_index(10));
    for (auto& x : l) x = rng.uniform(-5.0, 5.0);
    EXPECT_NEAR(domain_variance(l), verify::moment_variance(l), 1e-12);
  }
}

TEST(FinalizeWeights, TotalIsWeightedSum) {
  const auto r = make_report({2.0, 1.0}, {3, 1}, {ParamVector{1.0}, ParamVector{0.0}});
  EXPECT_EQ(r.weights, (std::vector<double>{0.75, 0.25}));
  EXPECT_EQ(r.total, 1.75);
  EXPECT_NO_THROW(validate(r));
  auto broken = r;
  broken.total = 1.0;
  EXPECT_THROW(validate(broken), std::logic_error);
}

TEST(DisamWeights, WorkedExample) {
  const auto r = make_report({2.0, 1.0}, {1, 1}, {ParamVector{1.0, 0.0}, ParamVector{0.0, 1.0}});
  const auto beta = disam_perturbation_weights(r, 0.1);
  EXPECT_EQ(beta, (std::vector<double>{0.45, 0.55}));
  const auto g = disam_perturbation_gradient(r, 0.1);
  EXPECT_EQ(g, (ParamVector{0.45, 0.55}));
  // Tilted toward the lower-loss domain relative to the SAM direction (0.5, 0.5).
  EXPECT_GT(g[1] / g[0], 1.0);
}

TEST(DisamWeights, SumToOneAndShiftInvariant) {
  CounterRng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    auto r = random_report(rng, 2 + rng.uniform_index(9), 5);
    const double lambda = rng.uniform(0.0, 10.0);
    const auto beta = disam_perturbation_weights(r, lambda);
    double s = 0.0;
    for (double b : beta) s += b;
    EXPECT_NEAR(s, 1.0, 1e-12);
    auto shifted = r;
    for (auto& l : shifted.losses) l += 7.0;
    const auto beta_shift = disam_perturbation_weights(shifted, lambda);
    for (std::size_t i = 0; i < beta.size(); ++i) EXPECT_NEAR(beta[i], beta_shift[i], 1e-12);
  }
}

TEST(DisamWeights, SignSymmetryAroundMean) {
  const auto r = make_report({1.3, 1.0, 0.7}, {1, 1, 1},
                             {ParamVector{1.0}, ParamVector{1.0}, ParamVector{1.0}});
  const auto beta = disam_perturbation_weights(r, 0.4);
  const double a = 1.0 / 3.0;
  EXPECT_NEAR(beta[0] - a, -(beta[2] - a), 1e-15);
  EXPECT_NEAR(beta[1], a, 1e-15);
}

TEST(DisamWeights, MonotoneInLambda) {
  const auto r = make_report({2.0, 1.0}, {1, 1}, {ParamVector{1.0}, ParamVector{1.0}});
  double prev_hi = 1.0, prev_lo = 0.0;
  for (double lambda : {0.0, 0.05, 0.1, 0.5, 1.0, 3.0}) {
    const auto beta = disam_perturbation_weights(r, lambda);
    EXPECT_LT(beta[0], prev_hi);
    EXPECT_GT(beta[1], prev_lo);
    prev_hi = beta[0];
    prev_lo = beta[1];
  }
}

TEST(DisamGradient, ReductionsAreExact) {
  CounterRng rng(12);
  const auto r = random_report(rng, 4, 6);
  EXPECT_EQ(disam_perturbation_gradient(r, 0.0), r.total_gradient());
  EXPECT_EQ(domain_inspired_loss_gradient(r, 0.0), r.total_gradient());
  auto equal = r;
  for (auto& l : equal.losses) l = 1.25;
  finalize_weights(equal);
  EXPECT_EQ(disam_perturbation_gradient(equal, 0.7), equal.total_gradient());
}

TEST(DisamGradient, BothFormsAgree) {
  CounterRng rng(13);
  for (int trial = 0; trial < 300; ++trial) {
    const auto r = random_report(rng, 1 + rng.uniform_index(10), 8);
    const double lambda = rng.uniform(0.0, 5.0);
    const auto a = disam_perturbation_gradient(r, lambda);
    const auto b = domain_inspired_loss_gradient(r, lambda);
    for (std::size_t j = 0; j < a.size(); ++j) EXPECT_NEAR(a[j], b[j], 1e-12);
  }
}

TEST(DisamGradient, MatchesFiniteDifferencesOnMlp) {
  CounterRng rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    const SoftmaxMLP mlp(3, 10, 3);
    const auto batch = testing::random_batch(rng, 40, 3, 3, 4);
    const auto w = testing::random_vector(rng, mlp.param_dim());
    const double lambda = rng.uniform(0.0, 2.0);
    const auto analytic = domain_inspired_loss_gradient(mlp.eval(w, batch), lambda);
    const auto numeric = verify::central_difference(
        [&](const ParamVector& x) {
          const auto r = mlp.eval(x, batch);
          return r.total - lambda * domain_variance(r.losses);
        },
        w);
    EXPECT_LT(verify::max_relative_error(analytic, numeric), 1e-6);
  }
}

TEST(IntuitiveWeights, Examples) {
  const auto r = make_report({1.0, 1.0}, {1, 1}, {ParamVector{1.0}, ParamVector{1.0}});
  ConvergenceTracker tracker;
  EXPECT_EQ(intuitive_weights(tracker, r, 1.0), r.weights);  // nothing seen yet

  // Domain 0 rose 1 above its running minimum; domain 1 is at its minimum.
  tracker.update(make_report({0.0, 1.0}, {1, 1}, {ParamVector{1.0}, ParamVector{1.0}}));
  EXPECT_EQ(intuitive_weights(tracker, r, 0.0), r.weights);
  EXPECT_EQ(intuitive_weights(tracker, r, 1.0), (std::vector<double>{0.75, 0.25}));
}

// A common shift cancels under normalization only when alpha is uniform.
TEST(IntuitiveWeights, EqualDegreesGiveUniformAlpha) {
  auto r = make_report({2.0, 3.0, 4.0}, {1, 1, 1}, {ParamVector{1.0}, ParamVector{1.0}, ParamVector{1.0}});
  ConvergenceTracker tracker;
  tracker.update(make_report({1.0, 2.0, 3.0}, {1, 1, 1}, {ParamVector{1.0}, ParamVector{1.0}, ParamVector{1.0}}));
  const auto w = intuitive_weights(tracker, r, 2.0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(w[i], r.weights[i], 1e-15);
}

TEST(IntuitiveWeights, StalledDomainGainsWeight) {
  ConvergenceTracker tracker;
  const std::vector<ParamVector> g{ParamVector{1.0}, ParamVector{1.0}};
  // Domain 0 stalls and drifts up, domain 1 keeps improving.
  double last_w0 = 0.5;
  for (int t = 0; t < 6; ++t) {
    const double l0 = 1.0 + 0.05 * t;
    const double l1 = 1.0 / (1.0 + t);
    const auto r = make_report({l0, l1}, {1, 1}, g);
    const auto w = intuitive_weights(tracker, r, 1.0);
    if (t > 0) EXPECT_GT(w[0], last_w0);
    last_w0 = w[0];
    tracker.update(r);
  }
  EXPECT_GT(last_w0, 0.5);
}

TEST(ConvergenceTracker, RunningMinAndDegree) {
  ConvergenceTracker t;
  const std::vector<ParamVector> g{ParamVector{1.0}};
  for (double l : {3.0, 2.0, 2.5}) t.update(make_report({l}, {1}, g));
  EXPECT_EQ(t.running_min(0), 2.0);
  EXPECT_EQ(t.latest(0), 2.5);
  EXPECT_EQ(t.degree(0), 0.5);
  EXPECT_EQ(t.degree_for(0, 1.0), 0.0);
  EXPECT_EQ(t.degree_for(5, 9.0), 0.0);
}

TEST(Vrex, ReductionsAndEqualLosses) {
  CounterRng rng(15);
  const auto r = random_report(rng, 3, 4);
  const auto zero = vrex_loss_and_gradient(r, 0.0);
  EXPECT_EQ(zero.loss, r.total);
  EXPECT_EQ(zero.gradient, r.total_gradient());
  auto equal = r;
  for (auto& l : equal.losses) l = 0.9;
  finalize_weights(equal);
  const auto e = vrex_loss_and_gradient(equal, 3.0);
  EXPECT_EQ(e.loss, equal.total);
  for (std::size_t j = 0; j < e.gradient.size(); ++j) EXPECT_NEAR(e.gradient[j], equal.total_gradient()[j], 1e-15);
}

TEST(Vrex, MatchesFiniteDifferences) {
  CounterRng rng(16);
  for (int trial = 0; trial < 20; ++trial) {
    const SoftmaxMLP mlp(2, 6, 3);
    const auto batch = testing::random_batch(rng, 30, 2, 3, 3);
    const auto w = testing::random_vector(rng, mlp.param_dim());
    const double beta = rng.uniform(0.0, 5.0);
    const auto pen = vrex_loss_and_gradient(mlp.eval(w, batch), beta);
    const auto numeric = verify::central_difference(
        [&](const ParamVector& x) { return vrex_loss_and_gradient(mlp.eval(x, batch), beta).loss; }, w);
    EXPECT_LT(verify::max_relative_error(pen.gradient, numeric), 1e-6);
  }
}

TEST(PerturbationSpec, Validation) {
  PerturbationSpec s;
  EXPECT_NO_THROW(s.validate());
  s.rho = 0.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = {};
  s.lambda = -0.1;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = {};
  s.beta_intuitive = -1.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace disam
