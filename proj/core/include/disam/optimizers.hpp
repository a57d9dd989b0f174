// Copyright (c) 2026, DISAM contributors
// SPDX-License-Identifier: Apache-2.0
//
// Step engines. Every variant takes one plain SGD step (no momentum, no
// weight decay); the perturbation-based variants differ only in how the
// ascent direction epsilon is built:
//
//   SAM        eps = rho * g / |g|,       g = sum_i alpha_i grad L_i
//   DISAM      eps = rho * g_DI / |g_DI|, g_DI = g - lambda * grad Var{L_i}
//   INTUITIVE  eps from convergence-weighted per-domain gradients
//
// and then descend with the plain weighted gradient evaluated at w + eps on
// the same batch.

#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "disam/domain_objective.hpp"
#include "disam/param_math.hpp"
#include "disam/problems.hpp"

namespace disam {

enum class OptimizerMode { kErm, kSam, kDisam, kIntuitive, kVrex };
enum class Schedule { kConstant, kInvSqrt };

std::string_view to_string(OptimizerMode mode) noexcept;
std::string_view to_string(Schedule schedule) noexcept;
/// Throws std::invalid_argument on an unknown name.
OptimizerMode parse_optimizer_mode(std::string_view name);
Schedule parse_schedule(std::string_view name);

namespace step_flags {
inline constexpr std::uint32_t kNone = 0;
/// Perturbation gradient norm <= kDegenerateNorm; the step fell back to ERM.
inline constexpr std::uint32_t kDegenerate = 1u << 0;
/// A loss or gradient was NaN/Inf; the parameters were left untouched.
inline constexpr std::uint32_t kNonFinite = 1u << 1;
}  // namespace step_flags

struct StepRecord {
  std::int64_t t = 0;
  double eta = 0.0;
  std::vector<int> present_domains;
  std::vector<double> losses;
  double total = 0.0;
  double variance = 0.0;
  /// Coefficients on the per-domain gradients in the perturbation direction
  /// (alpha for ERM/SAM/V-REx).
  std::vector<double> betas;
  double grad_norm = 0.0;
  double di_grad_norm = 0.0;
  /// Zero vector for ERM/V-REx and for degenerate steps.
  ParamVector epsilon;
  /// Angle to the previous perturbation; absent at the first step or next to
  /// a degenerate one.
  std::optional<double> phi;
  std::uint32_t flags = step_flags::kNone;

  double min_beta() const;
  bool degenerate() const noexcept { return (flags & step_flags::kDegenerate) != 0; }
  bool nonfinite() const noexcept { return (flags & step_flags::kNonFinite) != 0; }

  bool operator==(const StepRecord&) const = default;
};

struct OptimizerState {
  ParamVector w;
  std::int64_t t = 1;
  double eta0 = 0.1;
  Schedule schedule = Schedule::kInvSqrt;
  OptimizerMode mode = OptimizerMode::kErm;
  /// Required for SAM/DISAM/INTUITIVE, ignored otherwise.
  std::optional<PerturbationSpec> spec;
  /// V-REx penalty weight.
  double vrex_beta = 0.0;
  std::optional<ParamVector> last_perturbation;
  ConvergenceTracker tracker;

  /// eta0 or eta0 / sqrt(t).
  double eta() const;
};

/// Builds a state for `mode`, checking that the perturbation spec is present
/// and consistent. Throws std::invalid_argument otherwise.
OptimizerState make_optimizer_state(ParamVector w0, OptimizerMode mode, double eta0, Schedule schedule,
                                    std::optional<PerturbationSpec> spec = std::nullopt,
                                    double vrex_beta = 0.0);

StepRecord step_erm(OptimizerState& state, const Problem& problem, Batch batch);
StepRecord step_sam(OptimizerState& state, const Problem& problem, Batch batch);
StepRecord step_disam(OptimizerState& state, const Problem& problem, Batch batch);
StepRecord step_intuitive(OptimizerState& state, const Problem& problem, Batch batch);
StepRecord step_vrex(OptimizerState& state, const Problem& problem, Batch batch, double beta);

/// Dispatches on state.mode.
StepRecord step(OptimizerState& state, const Problem& problem, Batch batch);

/// Angle in [0, pi] between two perturbations, or nullopt if either is
/// degenerate.
std::optional<double> phi_between(const ParamVector& eps_prev, const ParamVector& eps_curr);

}  // namespace disam
