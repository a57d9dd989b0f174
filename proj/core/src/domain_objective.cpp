// Copyright (c) 2026, DISAM contributors
// SPDX-License-Identifier: Apache-2.0

#include "disam/domain_objective.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace disam {

ParamVector DomainLossReport::weighted_gradient(std::span<const double> coeffs) const {
  if (coeffs.size() != grads.size()) {
    throw DimensionError("weighted_gradient: " + std::to_string(coeffs.size()) +
                         " coefficients for " + std::to_string(grads.size()) + " domains");
  }
  ParamVector out(param_dim());
  for (std::size_t i = 0; i < grads.size(); ++i) axpy_inplace(coeffs[i], grads[i], out);
  return out;
}

bool DomainLossReport::all_finite() const noexcept {
  if (!std::isfinite(total)) return false;
  for (double l : losses) {
    if (!std::isfinite(l)) return false;
  }
  for (const auto& g : grads) {
    if (!g.all_finite()) return false;
  }
  return true;
}

void finalize_weights(DomainLossReport& report) {
  if (report.counts.size() != report.losses.size() || report.counts.empty()) {
    throw std::invalid_argument("finalize_weights: counts/losses shape mismatch");
  }
  const std::size_t n = std::accumulate(report.counts.begin(), report.counts.end(), std::size_t{0});
  if (n == 0) throw std::invalid_argument("finalize_weights: empty batch");
  report.weights.resize(report.counts.size());
  report.total = 0.0;
  for (std::size_t i = 0; i < report.counts.size(); ++i) {
    report.weights[i] = static_cast<double>(report.counts[i]) / static_cast<double>(n);
    report.total += report.weights[i] * report.losses[i];
  }
}

void validate(const DomainLossReport& report) {
  const std::size_t m = report.present_domains.size();
  if (m == 0) throw std::invalid_argument("DomainLossReport: no domains present");
  if (report.losses.size() != m || report.weights.size() != m || report.grads.size() != m) {
    throw std::invalid_argument("DomainLossReport: losses/weights/grads length mismatch");
  }
  double wsum = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (report.weights[i] < 0.0) throw std::invalid_argument("DomainLossReport: negative weight");
    if (report.grads[i].size() != report.grads.front().size()) {
      throw DimensionError("DomainLossReport: gradient lengths differ");
    }
    wsum += report.weights[i];
    total += report.weights[i] * report.losses[i];
  }
  if (std::abs(wsum - 1.0) > 1e-12) throw std::invalid_argument("DomainLossReport: weights do not sum to 1");
  if (std::abs(total - report.total) > 1e-12 * std::max(1.0, std::abs(total))) {
    throw std::invalid_argument("DomainLossReport: total is not the weighted loss sum");
  }
}

std::string_view to_string(PerturbationMode mode) noexcept {
  switch (mode) {
    case PerturbationMode::kSam: return "sam";
    case PerturbationMode::kDisam: return "disam";
    case PerturbationMode::kIntuitive: return "intuitive";
  }
  return "?";
}

void PerturbationSpec::validate() const {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw std::invalid_argument("rho must be > 0");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be >= 0");
  if (!(beta_intuitive >= 0.0) || !std::isfinite(beta_intuitive)) {
    throw std::invalid_argument("beta must be >= 0");
  }
}

void ConvergenceTracker::update(const DomainLossReport& report) {
  for (std::size_t i = 0; i < report.num_domains(); ++i) {
    const int d = report.present_domains[i];
    const double loss = report.losses[i];
    auto [it, inserted] = state_.try_emplace(d, Entry{loss, loss});
    if (!inserted) {
      it->second.running_min = std::min(it->second.running_min, loss);
      it->second.latest = loss;
    }
  }
}

double ConvergenceTracker::running_min(int domain) const { return state_.at(domain).running_min; }

double ConvergenceTracker::latest(int domain) const { return state_.at(domain).latest; }

double ConvergenceTracker::degree(int domain) const {
  const auto& e = state_.at(domain);
  return e.latest - e.running_min;
}

double ConvergenceTracker::degree_for(int domain, double loss) const {
  const auto it = state_.find(domain);
  if (it == state_.end()) return 0.0;
  return loss - std::min(it->second.running_min, loss);
}

double domain_variance(std::span<const double> losses) {
  const std::size_t m = losses.size();
  if (m == 0) return 0.0;
  double acc = 0.0;
  for (double li : losses) {
    for (double lj : losses) {
      const double d = li - lj;
      acc += d * d;
    }
  }
  return acc / (2.0 * static_cast<double>(m) * static_cast<double>(m));
}

namespace {

double mean_of(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

// (2/M)(L_i - mean) for each present domain.
std::vector<double> variance_coefficients(const DomainLossReport& report) {
  const auto m = static_cast<double>(report.num_domains());
  const double mean = mean_of(report.losses);
  std::vector<double> c(report.num_domains());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = (2.0 / m) * (report.losses[i] - mean);
  return c;
}

}  // namespace

ParamVector variance_gradient(const DomainLossReport& report) {
  return report.weighted_gradient(variance_coefficients(report));
}

std::vector<double> disam_perturbation_weights(const DomainLossReport& report, double lambda) {
  const auto m = static_cast<double>(report.num_domains());
  const double mean = mean_of(report.losses);
  std::vector<double> beta(report.num_domains());
  for (std::size_t i = 0; i < beta.size(); ++i) {
    beta[i] = report.weights[i] - (2.0 * lambda / m) * (report.losses[i] - mean);
  }
  return beta;
}

ParamVector disam_perturbation_gradient(const DomainLossReport& report, double lambda) {
  return report.weighted_gradient(disam_perturbation_weights(report, lambda));
}

ParamVector domain_inspired_loss_gradient(const DomainLossReport& report, double lambda) {
  ParamVector g = report.total_gradient();
  axpy_inplace(-lambda, variance_gradient(report), g);
  return g;
}

std::vector<double> intuitive_weights(const ConvergenceTracker& tracker,
                                      const DomainLossReport& report, double beta) {
  if (!(beta >= 0.0)) throw std::invalid_argument("intuitive_weights: beta must be >= 0");
  const std::size_t m = report.num_domains();
  std::vector<double> raw(m);
  bool shifted = false;
  for (std::size_t i = 0; i < m; ++i) {
    const double bump = beta * tracker.degree_for(report.present_domains[i], report.losses[i]);
    shifted = shifted || bump != 0.0;
    raw[i] = report.weights[i] + bump;
  }
  if (!shifted) return report.weights;
  const double denom = std::accumulate(raw.begin(), raw.end(), 0.0);
  for (double& r : raw) r /= denom;
  return raw;
}

PenalizedObjective vrex_loss_and_gradient(const DomainLossReport& report, double beta) {
  if (!(beta >= 0.0)) throw std::invalid_argument("vrex_loss_and_gradient: beta must be >= 0");
  PenalizedObjective out{report.total + beta * domain_variance(report.losses), report.total_gradient()};
  axpy_inplace(beta, variance_gradient(report), out.gradient);
  return out;
}

}  // namespace disam
