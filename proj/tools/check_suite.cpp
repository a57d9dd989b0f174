// Copyright (c) 2026, DISAM contributors
// SPDX-License-Identifier: Apache-2.0

#include "check_suite.hpp"

#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "disam/diagnostics.hpp"
#include "disam/domain_objective.hpp"
#include "disam/harness.hpp"
#include "disam/optimizers.hpp"
#include "disam/problems.hpp"
#include "disam/rng.hpp"
#include "disam/verify.hpp"

namespace disam::tools {
namespace {

std::vector<Sample> random_batch(CounterRng& rng, int n, int d, int c, int domains) {
  std::vector<Sample> out(n);
  for (int i = 0; i < n; ++i) {
    out[i].features.resize(d);
    for (auto& f : out[i].features) f = rng.normal();
    out[i].label = static_cast<int>(rng.uniform_index(c));
    out[i].domain = i % domains;
  }
  return out;
}

bool variance_oracle() {
  CounterRng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> l(2 + rng.uniform_index(9));
    for (auto& x : l) x = rng.uniform(0.0, 5.0);
    if (std::abs(domain_variance(l) - verify::moment_variance(l)) > 1e-12) return false;
  }
  return true;
}

bool gradient_oracle() {
  CounterRng rng(12);
  const SoftmaxMLP mlp(3, 8, 4);
  for (int trial = 0; trial < 5; ++trial) {
    const auto batch = random_batch(rng, 24, 3, 4, 3);
    ParamVector w(mlp.param_dim());
    for (auto& v : w) v = rng.uniform(-1.0, 1.0);
    const double lambda = 0.1;
    const auto report = mlp.eval(w, batch);
    const auto analytic = domain_inspired_loss_gradient(report, lambda);
    const auto objective = [&](const ParamVector& x) {
      const auto r = mlp.eval(x, batch);
      return r.total - lambda * domain_variance(r.losses);
    };
    if (verify::max_relative_error(analytic, verify::central_difference(objective, w)) > 1e-6) return false;
    const auto beta_route = disam_perturbation_gradient(report, lambda);
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (std::abs(beta_route[i] - analytic[i]) > 1e-12) return false;
    }
  }
  return true;
}

bool worked_example() {
  DomainLossReport r;
  r.present_domains = {0, 1};
  r.counts = {1, 1};
  r.losses = {2.0, 1.0};
  r.grads = {ParamVector{1.0}, ParamVector{1.0}};
  finalize_weights(r);
  const auto beta = disam_perturbation_weights(r, 0.1);
  return beta[0] == 0.45 && beta[1] == 0.55;
}

bool reduction_identities() {
  ExperimentConfig cfg = default_config();
  cfg.steps = 150;
  cfg.seeds = {3};
  const auto data = prepare_data(cfg);
  auto trace_for = [&](OptimizerMode mode, double lambda, double beta) {
    ExperimentConfig c = cfg;
    c.optimizer.mode = mode;
    c.optimizer.lambda = lambda;
    c.optimizer.beta = beta;
    return run_single(c, data, 3).trace.steps;
  };
  const auto sam = trace_for(OptimizerMode::kSam, 0.1, 0.0);
  return sam == trace_for(OptimizerMode::kDisam, 0.0, 0.0) && sam == trace_for(OptimizerMode::kIntuitive, 0.1, 0.0) &&
         trace_for(OptimizerMode::kErm, 0.1, 0.0) == trace_for(OptimizerMode::kVrex, 0.1, 0.0);
}

bool perturbation_contract() {
  ExperimentConfig cfg = default_config();
  cfg.steps = 300;
  cfg.optimizer.mode = OptimizerMode::kDisam;
  const auto data = prepare_data(cfg);
  const auto run = run_single(cfg, data, 0);
  for (const auto& s : run.trace.steps) {
    if (s.degenerate()) continue;
    if (std::abs(l2_norm(s.epsilon) - cfg.optimizer.rho) > 1e-12 * cfg.optimizer.rho) return false;
    double sum = 0.0;
    for (double b : s.betas) sum += b;
    if (std::abs(sum - 1.0) > 1e-12) return false;
  }
  return true;
}

bool normalization_example() {
  const std::vector<double> s{5.0, 3.0, 1.0};
  const auto n = normalize_convergence(std::span<const double>(s));
  return !n.degenerate && n.values == std::vector<double>{1.0, 0.5, 0.0};
}

}  // namespace

int run_check_suite(std::ostream& out) {
  const std::vector<std::pair<std::string, std::function<bool()>>> checks = {
      {"domain variance double sum == moment formula", variance_oracle},
      {"domain-inspired gradient matches finite differences and the beta route", gradient_oracle},
      {"adaptive weights on the M=2 worked example", worked_example},
      {"DISAM(lambda=0) == SAM == INTUITIVE(beta=0); V-REx(beta=0) == ERM", reduction_identities},
      {"|eps| == rho and sum(beta) == 1 on every DISAM step", perturbation_contract},
      {"normalize_convergence(5,3,1) == (1,0.5,0)", normalization_example},
  };
  int failed = 0;
  for (const auto& [name, fn] : checks) {
    bool ok = false;
    try {
      ok = fn();
    } catch (const std::exception& e) {
      out << "  error: " << e.what() << '\n';
    }
    out << (ok ? "PASS  " : "FAIL  ") << name << '\n';
    if (!ok) ++failed;
  }
  return failed;
}

}  // namespace disam::tools
