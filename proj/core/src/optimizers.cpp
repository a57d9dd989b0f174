// Copyright (c) 2026, DISAM contributors
// SPDX-License-Identifier: Apache-2.0

#include "disam/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace disam {

std::string_view to_string(OptimizerMode mode) noexcept {
  switch (mode) {
    case OptimizerMode::kErm: return "erm";
    case OptimizerMode::kSam: return "sam";
    case OptimizerMode::kDisam: return "disam";
    case OptimizerMode::kIntuitive: return "intuitive";
    case OptimizerMode::kVrex: return "vrex";
  }
  return "?";
}

std::string_view to_string(Schedule schedule) noexcept {
  return schedule == Schedule::kConstant ? "constant" : "inv_sqrt";
}

OptimizerMode parse_optimizer_mode(std::string_view name) {
  for (auto m : {OptimizerMode::kErm, OptimizerMode::kSam, OptimizerMode::kDisam, OptimizerMode::kIntuitive,
                 OptimizerMode::kVrex}) {
    if (to_string(m) == name) return m;
  }
  throw std::invalid_argument("unknown optimizer mode '" + std::string(name) + "'");
}

Schedule parse_schedule(std::string_view name) {
  if (name == "constant") return Schedule::kConstant;
  if (name == "inv_sqrt") return Schedule::kInvSqrt;
  throw std::invalid_argument("unknown schedule '" + std::string(name) + "'");
}

double StepRecord::min_beta() const {
  if (betas.empty()) return 0.0;
  return *std::min_element(betas.begin(), betas.end());
}

double OptimizerState::eta() const {
  if (schedule == Schedule::kConstant) return eta0;
  return eta0 / std::sqrt(static_cast<double>(t));
}

OptimizerState make_optimizer_state(ParamVector w0, OptimizerMode mode, double eta0, Schedule schedule,
                                    std::optional<PerturbationSpec> spec, double vrex_beta) {
  if (!(eta0 > 0.0)) throw std::invalid_argument("eta0 must be > 0");
  OptimizerState s;
  s.w = std::move(w0);
  s.eta0 = eta0;
  s.schedule = schedule;
  s.mode = mode;
  s.vrex_beta = vrex_beta;
  switch (mode) {
    case OptimizerMode::kSam:
    case OptimizerMode::kDisam:
    case OptimizerMode::kIntuitive: {
      if (!spec) throw std::invalid_argument("perturbation modes need a PerturbationSpec");
      spec->validate();
      const auto expected = mode == OptimizerMode::kSam     ? PerturbationMode::kSam
                            : mode == OptimizerMode::kDisam ? PerturbationMode::kDisam
                                                            : PerturbationMode::kIntuitive;
      if (spec->mode != expected) throw std::invalid_argument("PerturbationSpec mode does not match optimizer");
      s.spec = spec;
      break;
    }
    case OptimizerMode::kVrex:
      if (!(vrex_beta >= 0.0)) throw std::invalid_argument("V-REx beta must be >= 0");
      break;
    case OptimizerMode::kErm:
      break;
  }
  return s;
}

namespace {

StepRecord begin_record(const OptimizerState& state, const DomainLossReport& report) {
  StepRecord rec;
  rec.t = state.t;
  rec.eta = state.eta();
  rec.present_domains = report.present_domains;
  rec.losses = report.losses;
  rec.total = report.total;
  rec.variance = domain_variance(report.losses);
  return rec;
}

DomainLossReport evaluate(const Problem& problem, const ParamVector& w, Batch batch) {
  auto report = problem.eval(w, batch);
  if (report.num_domains() == 0) throw std::invalid_argument("optimizer step: batch has no samples");
  return report;
}

// Shared tail: w <- w - eta * g, advance t.
void descend(OptimizerState& state, const ParamVector& g) {
  axpy_inplace(-state.eta(), g, state.w);
  ++state.t;
}

// Plain gradient step with an already-chosen descent direction.
StepRecord gradient_step(OptimizerState& state, const DomainLossReport& report, const ParamVector& descent,
                         std::vector<double> betas) {
  StepRecord rec = begin_record(state, report);
  rec.betas = std::move(betas);
  rec.grad_norm = l2_norm(report.total_gradient());
  rec.di_grad_norm = l2_norm(descent);
  rec.epsilon = ParamVector(state.w.size());
  if (!report.all_finite() || !descent.all_finite()) {
    rec.flags |= step_flags::kNonFinite;
    return rec;
  }
  state.tracker.update(report);
  state.last_perturbation.reset();
  descend(state, descent);
  return rec;
}

// Two-pass ascent/descent step shared by SAM, DISAM and INTUITIVE. `betas` are
// the per-domain coefficients recorded for the step; `direction` is the
// perturbation gradient.
StepRecord perturbed_step(OptimizerState& state, const Problem& problem, Batch batch,
                          const DomainLossReport& report, const ParamVector& direction,
                          std::vector<double> betas) {
  StepRecord rec = begin_record(state, report);
  rec.betas = std::move(betas);
  const ParamVector g = report.total_gradient();
  rec.grad_norm = l2_norm(g);
  rec.di_grad_norm = l2_norm(direction);
  if (!report.all_finite() || !direction.all_finite()) {
    rec.flags |= step_flags::kNonFinite;
    rec.epsilon = ParamVector(state.w.size());
    return rec;
  }
  state.tracker.update(report);

  auto eps = normalize_to_radius(direction, state.spec->rho);
  if (!eps) {
    rec.flags |= step_flags::kDegenerate;
    rec.epsilon = ParamVector(state.w.size());
    state.last_perturbation.reset();
    descend(state, g);
    return rec;
  }

  const ParamVector w_asc = axpy(1.0, *eps, state.w);
  const DomainLossReport at_asc = evaluate(problem, w_asc, batch);
  const ParamVector descent = at_asc.total_gradient();
  if (!at_asc.all_finite() || !descent.all_finite()) {
    rec.flags |= step_flags::kNonFinite;
    rec.epsilon = std::move(*eps);
    return rec;
  }
  if (state.last_perturbation) rec.phi = phi_between(*state.last_perturbation, *eps);
  rec.epsilon = *eps;
  state.last_perturbation = std::move(*eps);
  descend(state, descent);
  return rec;
}

void require_mode(const OptimizerState& state, OptimizerMode mode) {
  if (state.mode != mode) {
    throw std::invalid_argument("optimizer state is configured for " + std::string(to_string(state.mode)) +
                                ", not " + std::string(to_string(mode)));
  }
  if (mode != OptimizerMode::kErm && mode != OptimizerMode::kVrex && !state.spec) {
    throw std::invalid_argument("perturbation step without a PerturbationSpec");
  }
}

}  // namespace

StepRecord step_erm(OptimizerState& state, const Problem& problem, Batch batch) {
  const auto report = evaluate(problem, state.w, batch);
  return gradient_step(state, report, report.total_gradient(), report.weights);
}

StepRecord step_vrex(OptimizerState& state, const Problem& problem, Batch batch, double beta) {
  const auto report = evaluate(problem, state.w, batch);
  auto penalized = vrex_loss_and_gradient(report, beta);
  return gradient_step(state, report, penalized.gradient, report.weights);
}

StepRecord step_sam(OptimizerState& state, const Problem& problem, Batch batch) {
  require_mode(state, OptimizerMode::kSam);
  const auto report = evaluate(problem, state.w, batch);
  return perturbed_step(state, problem, batch, report, report.total_gradient(), report.weights);
}

StepRecord step_disam(OptimizerState& state, const Problem& problem, Batch batch) {
  require_mode(state, OptimizerMode::kDisam);
  const auto report = evaluate(problem, state.w, batch);
  const double lambda = state.spec->lambda;
  return perturbed_step(state, problem, batch, report, domain_inspired_loss_gradient(report, lambda),
                        disam_perturbation_weights(report, lambda));
}

StepRecord step_intuitive(OptimizerState& state, const Problem& problem, Batch batch) {
  require_mode(state, OptimizerMode::kIntuitive);
  const auto report = evaluate(problem, state.w, batch);
  auto weights = intuitive_weights(state.tracker, report, state.spec->beta_intuitive);
  const ParamVector direction = report.weighted_gradient(weights);
  return perturbed_step(state, problem, batch, report, direction, std::move(weights));
}

StepRecord step(OptimizerState& state, const Problem& problem, Batch batch) {
  switch (state.mode) {
    case OptimizerMode::kErm: return step_erm(state, problem, batch);
    case OptimizerMode::kSam: return step_sam(state, problem, batch);
    case OptimizerMode::kDisam: return step_disam(state, problem, batch);
    case OptimizerMode::kIntuitive: return step_intuitive(state, problem, batch);
    case OptimizerMode::kVrex: return step_vrex(state, problem, batch, state.vrex_beta);
  }
  throw std::logic_error("unreachable optimizer mode");
}

std::optional<double> phi_between(const ParamVector& eps_prev, const ParamVector& eps_curr) {
  const double a = l2_norm(eps_prev);
  const double b = l2_norm(eps_curr);
  if (!(a > kDegenerateNorm) || !(b > kDegenerateNorm)) return std::nullopt;
  const double c = std::clamp(dot(eps_prev, eps_curr) / (a * b), -1.0, 1.0);
  return std::acos(c);
}

}  // namespace disam
