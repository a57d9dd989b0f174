// Copyright (c) 2026, DISAM contributors
// SPDX-License-Identifier: Apache-2.0
//
// Multi-domain objective pieces: the weighted total loss, the variance of the
// per-domain losses, the domain-inspired perturbation gradient and its
// per-domain weights, the convergence-weighted ("intuitive") variant, and the
// V-REx penalty used as a descent-side baseline.

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "disam/param_math.hpp"

namespace disam {

/// Per-domain losses and gradients for one batch. Index i of every sequence
/// refers to present_domains[i]; domains with no samples in the batch are
/// absent rather than zero-filled.
struct DomainLossReport {
  std::vector<int> present_domains;
  std::vector<std::size_t> counts;
  std::vector<double> losses;
  /// alpha_i = n_i / sum_j n_j over the present domains.
  std::vector<double> weights;
  std::vector<ParamVector> grads;
  double total = 0.0;

  std::size_t num_domains() const noexcept { return present_domains.size(); }
  std::size_t param_dim() const noexcept { return grads.empty() ? 0 : grads.front().size(); }

  /// sum_i coeffs[i] * grads[i], accumulated in domain order.
  ParamVector weighted_gradient(std::span<const double> coeffs) const;

  /// Gradient of the weighted total, sum_i alpha_i * grad L_i.
  ParamVector total_gradient() const { return weighted_gradient(weights); }

  bool all_finite() const noexcept;
};

/// Fills weights from counts and total from losses. Throws std::invalid_argument
/// if counts are empty or all zero.
void finalize_weights(DomainLossReport& report);

/// Throws std::invalid_argument if the report violates its shape/weight/total
/// invariants.
void validate(const DomainLossReport& report);

enum class PerturbationMode { kSam, kDisam, kIntuitive };

std::string_view to_string(PerturbationMode mode) noexcept;

struct PerturbationSpec {
  double rho = 0.05;
  double lambda = 0.1;
  PerturbationMode mode = PerturbationMode::kDisam;
  double beta_intuitive = 0.0;

  /// Throws std::invalid_argument on rho <= 0, lambda < 0 or beta < 0.
  void validate() const;
};

/// Running per-domain loss minimum, the stand-in for the unknown optimum
/// L_i^*. degree(i) = latest_i - running_min_i is >= 0 and grows as a domain
/// drifts away from the best loss it has reached.
class ConvergenceTracker {
 public:
  void update(const DomainLossReport& report);

  bool has(int domain) const { return state_.contains(domain); }
  double running_min(int domain) const;
  double latest(int domain) const;
  double degree(int domain) const;

  /// L - min(running_min, L) for a loss not yet folded into the tracker.
  /// Unseen domains have degree 0.
  double degree_for(int domain, double loss) const;

 private:
  struct Entry {
    double running_min;
    double latest;
  };
  std::map<int, Entry> state_;
};

/// Var{L_i} = 1/(2M^2) sum_i sum_j (L_i - L_j)^2, evaluated as the double sum.
double domain_variance(std::span<const double> losses);

/// d Var / d w = (2/M) sum_i (L_i - mean) grad L_i.
ParamVector variance_gradient(const DomainLossReport& report);

/// beta_i = alpha_i - (2 lambda / M)(L_i - mean L), M = present domains.
/// No floor is applied; a domain far above the mean can get a negative weight.
std::vector<double> disam_perturbation_weights(const DomainLossReport& report, double lambda);

/// sum_i beta_i grad L_i with beta from disam_perturbation_weights.
ParamVector disam_perturbation_gradient(const DomainLossReport& report, double lambda);

/// grad L_total - lambda * grad Var. Same quantity as
/// disam_perturbation_gradient, computed along the "loss minus penalty" route.
ParamVector domain_inspired_loss_gradient(const DomainLossReport& report, double lambda);

/// (alpha_i + beta C_i) / sum_j (alpha_j + beta C_j) with C_i from the tracker.
/// Returns alpha unchanged when every beta*C_i is zero.
std::vector<double> intuitive_weights(const ConvergenceTracker& tracker,
                                      const DomainLossReport& report, double beta);

struct PenalizedObjective {
  double loss;
  ParamVector gradient;
};

/// V-REx: total + beta*Var and its gradient. The penalty is added (descent
/// side), unlike the subtraction inside the DISAM perturbation objective.
PenalizedObjective vrex_loss_and_gradient(const DomainLossReport& report, double beta);

}  // namespace disam
