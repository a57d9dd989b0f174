// Copyright (c) 2026, DISAM contributors
// SPDX-License-Identifier: Apache-2.0

#include "disam/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace disam {

SharpnessEstimate estimate_sharpness_ascent(const Problem& problem, const ParamVector& w, Batch batch,
                                            double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("estimate_sharpness_ascent: rho must be > 0");
  const auto here = problem.eval(w, batch);
  const auto eps = normalize_to_radius(here.total_gradient(), rho);
  if (!eps) return {0.0, true};
  const auto there = problem.eval(axpy(1.0, *eps, w), batch);
  return {there.total - here.total, false};
}

double gradient_variance(std::span<const ParamVector> grads) {
  if (grads.size() < 2) throw std::invalid_argument("gradient_variance: need at least 2 gradients");
  // Pairwise form (1/B^2) sum_{a<b} |g_a - g_b|^2: exact zero for identical
  // gradients and free of the mean's rounding.
  double acc = 0.0;
  for (std::size_t a = 0; a < grads.size(); ++a) {
    for (std::size_t b = a + 1; b < grads.size(); ++b) {
      require_same_length(grads[a], grads[b], "gradient_variance");
      for (std::size_t j = 0; j < grads[a].size(); ++j) {
        const double d = grads[a][j] - grads[b][j];
        acc += d * d;
      }
    }
  }
  const double n = static_cast<double>(grads.size());
  return acc / (n * n);
}

double estimate_sharpness_gradvar(const Problem& problem, const ParamVector& w,
                                  std::span<const std::vector<Sample>> batches) {
  if (batches.size() < 2) throw std::invalid_argument("estimate_sharpness_gradvar: need at least 2 batches");
  std::vector<ParamVector> grads;
  grads.reserve(batches.size());
  for (const auto& b : batches) grads.push_back(problem.eval(w, b).total_gradient());
  return gradient_variance(grads);
}

NormalizedSeries normalize_convergence(std::span<const double> series) {
  if (series.empty()) throw std::invalid_argument("normalize_convergence: empty series");
  const auto [lo_it, hi_it] = std::minmax_element(series.begin(), series.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  NormalizedSeries out;
  out.values.resize(series.size(), 0.0);
  if (!(range > 0.0)) {
    out.degenerate = true;
    return out;
  }
  for (std::size_t i = 0; i < series.size(); ++i) out.values[i] = (series[i] - lo) / range;
  return out;
}

std::vector<NormalizedSeries> normalize_convergence(const std::vector<std::vector<double>>& series) {
  std::vector<NormalizedSeries> out;
  out.reserve(series.size());
  for (const auto& s : series) out.push_back(normalize_convergence(std::span<const double>(s)));
  return out;
}

HeldoutMetrics heldout_domain_eval(const SoftmaxMLP& model, const ParamVector& w, Batch heldout) {
  if (heldout.empty()) throw ConfigError("heldout_domain_eval: held-out set is empty");
  HeldoutMetrics m;
  std::size_t correct = 0;
  for (const auto& s : heldout) {
    if (model.predict(w, s.features) == s.label) ++correct;
  }
  m.loss = model.mean_loss(w, heldout);
  m.accuracy = static_cast<double>(correct) / static_cast<double>(heldout.size());
  return m;
}

HeldoutMetrics heldout_domain_eval(const SoftmaxMLP& model, const ParamVector& w, const DomainDataset& heldout) {
  std::vector<Sample> all;
  for (const auto& d : heldout.domains) all.insert(all.end(), d.begin(), d.end());
  return heldout_domain_eval(model, w, Batch(all));
}

void validate(const TrainingTrace& trace) {
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    if (trace.steps[i].t != static_cast<std::int64_t>(i) + 1) {
      throw std::logic_error("trace step indices are not gap-free from 1");
    }
  }
  std::int64_t next = 1;
  for (const auto& e : trace.epochs) {
    if (e.first_step != next || e.last_step < e.first_step) {
      throw std::logic_error("epoch summaries are not disjoint and contiguous");
    }
    next = e.last_step + 1;
  }
  if (!trace.epochs.empty() && trace.epochs.back().last_step > static_cast<std::int64_t>(trace.steps.size())) {
    throw std::logic_error("epoch summary extends past the last step");
  }
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty sequence");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

std::optional<double> median_phi(const TrainingTrace& trace, std::int64_t after_step) {
  std::vector<double> phis;
  for (const auto& s : trace.steps) {
    if (s.t > after_step && s.phi) phis.push_back(*s.phi);
  }
  if (phis.empty()) return std::nullopt;
  return median(std::move(phis));
}

}  // namespace disam
