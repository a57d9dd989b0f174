// Copyright (c) 2026, DISAM contributors
// SPDX-License-Identifier: Apache-2.0
//
// Sharpness estimators, convergence-curve normalization, held-out evaluation
// and the per-run trace they are collected into.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "disam/optimizers.hpp"
#include "disam/param_math.hpp"
#include "disam/problems.hpp"

namespace disam {

struct SharpnessEstimate {
  double value = 0.0;
  bool degenerate = false;
};

/// One-ascent-step sharpness: L(w + rho * g/|g|) - L(w) on the batch's
/// weighted total loss. A zero gradient gives {0, degenerate}.
SharpnessEstimate estimate_sharpness_ascent(const Problem& problem, const ParamVector& w, Batch batch,
                                            double rho);

/// (1/B) sum_b |g_b - g_mean|^2 over precomputed gradients. Needs >= 2.
double gradient_variance(std::span<const ParamVector> grads);

/// gradient_variance of grad L_total(w; batch_b) over the batches.
double estimate_sharpness_gradvar(const Problem& problem, const ParamVector& w,
                                  std::span<const std::vector<Sample>> batches);

struct NormalizedSeries {
  std::vector<double> values;
  /// max == min; values are all zero.
  bool degenerate = false;
};

/// (L_t - min) / (max - min) over the whole series.
NormalizedSeries normalize_convergence(std::span<const double> series);

/// Applies normalize_convergence to each per-domain series.
std::vector<NormalizedSeries> normalize_convergence(const std::vector<std::vector<double>>& series);

struct HeldoutMetrics {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Mean cross-entropy and argmax accuracy on samples from an unseen domain.
/// Throws ConfigError if `heldout` is empty.
HeldoutMetrics heldout_domain_eval(const SoftmaxMLP& model, const ParamVector& w, Batch heldout);

/// Overload over a dataset's domains, all treated as held out.
HeldoutMetrics heldout_domain_eval(const SoftmaxMLP& model, const ParamVector& w, const DomainDataset& heldout);

struct EpochSummary {
  int epoch = 0;
  std::int64_t first_step = 0;
  std::int64_t last_step = 0;
  /// Mean batch loss per training domain over the epoch's steps; NaN for a
  /// domain that never appeared.
  std::vector<double> mean_domain_loss;
  double heldout_loss = 0.0;
  double heldout_accuracy = 0.0;
  double sharpness_gradvar = 0.0;
  double sharpness_ascent = 0.0;
};

struct TrainingTrace {
  std::string config_hash;
  std::uint64_t seed = 0;
  /// Global ids of the training domains, i.e. the loss columns.
  std::vector<int> train_domains;
  std::vector<StepRecord> steps;
  std::vector<EpochSummary> epochs;
  bool diverged = false;
};

/// Throws std::logic_error if step indices are not 1, 2, ... or epoch ranges
/// are not disjoint and contiguous.
void validate(const TrainingTrace& trace);

/// Median of the present phi_t values among steps with t > after_step.
std::optional<double> median_phi(const TrainingTrace& trace, std::int64_t after_step);

double median(std::vector<double> values);

}  // namespace disam
