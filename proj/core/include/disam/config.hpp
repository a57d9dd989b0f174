// Copyright (c) 2026, DISAM contributors
// SPDX-License-Identifier: Apache-2.0
//
// ExperimentConfig and its JSON form. Parsing is strict: unknown keys and
// wrongly-typed values are rejected with ConfigError.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "disam/optimizers.hpp"
#include "disam/problems.hpp"

namespace disam {

struct ProblemConfig {
  /// Only "mlp" (SoftmaxMLP on generate_shifted_clusters data) is runnable
  /// from a config file.
  std::string kind = "mlp";
  int hidden = 16;
  ShiftedClusterSpec dataset{};
  /// Fraction of each training domain held back for in-domain validation.
  double val_fraction = 0.2;
};

struct OptimizerConfig {
  OptimizerMode mode = OptimizerMode::kDisam;
  double rho = 0.05;
  double lambda = 0.1;
  /// INTUITIVE convergence weight or V-REx penalty, depending on mode.
  double beta = 0.0;
  double eta0 = 0.1;
  Schedule schedule = Schedule::kInvSqrt;
};

struct SweepConfig {
  /// "rho", "lambda" or "beta".
  std::string axis = "rho";
  std::vector<double> values;
};

struct MaxRhoConfig {
  double rho_lo = 0.01;
  double rho_hi = 3.0;
  double tol = 0.01;
  /// Feasible iff final train loss <= tau_factor * ERM final train loss.
  double tau_factor = 1.05;
};

struct ExperimentConfig {
  ProblemConfig problem{};
  OptimizerConfig optimizer{};
  std::int64_t steps = 2000;
  int batch_size = 32;
  int heldout_domain = 0;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  /// Not part of the hash or the echoed config.
  std::string output_dir;
  std::optional<SweepConfig> sweep;
  std::optional<MaxRhoConfig> max_rho;

  /// Throws ConfigError on any out-of-range field.
  void validate() const;

  /// SAM/DISAM/INTUITIVE spec derived from the optimizer block.
  std::optional<PerturbationSpec> perturbation() const;
};

/// The documented default toy experiment.
ExperimentConfig default_config();

nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);

ExperimentConfig load_config(const std::string& path);

/// Canonical text: sorted keys, no whitespace, shortest round-trip doubles.
std::string canonical_config_text(const ExperimentConfig& config);

/// FNV-1a of canonical_config_text.
std::string config_hash(const ExperimentConfig& config);

}  // namespace disam
