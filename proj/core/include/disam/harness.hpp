// Copyright (c) 2026, DISAM contributors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment orchestration: seeded runs, sensitivity sweeps, the max-rho
// bisection and the leave-one-domain-out protocol. Independent runs fan out
// to a bounded worker pool; each run is a pure function of (config, seed), so
// results never depend on the worker count.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "disam/config.hpp"
#include "disam/diagnostics.hpp"
#include "disam/problems.hpp"

namespace disam {

/// Dataset split for one config: training domains (minus a validation
/// slice), the validation slice, and the held-out domain.
struct PreparedData {
  DomainDataset dataset;
  std::vector<int> train_domains;
  std::vector<Sample> train;
  std::vector<Sample> validation;
  std::vector<Sample> heldout;
  /// Fixed partition of `heldout` used for gradient-variance sharpness.
  std::vector<std::vector<Sample>> heldout_batches;
};

PreparedData prepare_data(const ExperimentConfig& config);

struct RunSummary {
  std::uint64_t seed = 0;
  bool diverged = false;
  std::int64_t steps_run = 0;
  /// Full training split at the final parameters.
  double final_train_loss = 0.0;
  std::vector<double> final_domain_losses;
  double final_domain_variance = 0.0;
  std::optional<double> val_loss;
  std::optional<double> val_accuracy;
  std::optional<double> heldout_loss;
  std::optional<double> heldout_accuracy;
  /// Gradient-variance sharpness on the held-out domain at the final epoch.
  std::optional<double> sharpness;
  /// Median phi_t over the second half of the run.
  std::optional<double> median_phi;
  std::int64_t degenerate_steps = 0;
  double min_beta = 0.0;
};

struct RunResult {
  TrainingTrace trace;
  RunSummary summary;
};

RunResult run_single(const ExperimentConfig& config, const PreparedData& data, std::uint64_t seed);

struct ExperimentResult {
  std::string config_hash;
  std::vector<RunResult> runs;  // in config.seeds order
};

/// Runs every seed of the config. When config.output_dir is non-empty, writes
/// trace_seed<S>.csv, trace_seed<S>.json and summary.json there.
ExperimentResult run_experiment(const ExperimentConfig& config, int workers = 1);

/// Runs fn(0..n-1) on up to `workers` threads; results are indexed by task.
template <typename R>
std::vector<R> parallel_map(std::size_t n, int workers, const std::function<R(std::size_t)>& fn);

// ---------------------------------------------------------------------------
// Sweeps

struct SweepGrid {
  std::string axis;  // rho | lambda | beta
  std::vector<double> values;
  ExperimentConfig base;

  /// Values strictly increasing and valid for the axis; throws ConfigError.
  void validate() const;
  ExperimentConfig cell_config(double value) const;
};

struct SweepRow {
  double value = 0.0;
  int seeds = 0;
  int diverged = 0;
  /// Means over non-diverged seeds; NaN when every seed diverged.
  double final_train_loss = 0.0;
  double heldout_loss = 0.0;
  double heldout_accuracy = 0.0;
  double sharpness = 0.0;
  double median_phi = 0.0;
};

struct SweepResult {
  std::string axis;
  std::vector<SweepRow> rows;
};

/// One seed set per grid value. Every cell uses the base config's seeds, so
/// cells differ only in the swept value. Writes sweep_summary.{csv,json} when
/// base.output_dir is set.
SweepResult sweep(const SweepGrid& grid, int workers = 1);

// ---------------------------------------------------------------------------
// Max-rho search

struct BisectionResult {
  double rho = 0.0;
  /// The endpoints did not bracket a feasible/infeasible transition.
  bool monotonicity_unverified = false;
  std::vector<std::pair<double, bool>> probes;
};

/// Largest feasible value on [lo, hi] to within tol, assuming feasibility is
/// monotone (feasible below some threshold). If lo is infeasible returns lo,
/// if hi is feasible returns hi, both flagged.
BisectionResult bisect_max_feasible(double lo, double hi, double tol, const std::function<bool(double)>& feasible);

struct MaxRhoResult {
  BisectionResult search;
  /// Per-seed feasibility thresholds, tau_factor * ERM final train loss.
  std::vector<double> tau;
};

/// Feasible(rho): final training loss <= tau_s for a strict majority of the
/// base config's seeds, with the base config's optimizer at that rho.
MaxRhoResult max_rho_search(const ExperimentConfig& base, const MaxRhoConfig& search, int workers = 1);

// ---------------------------------------------------------------------------
// Leave-one-domain-out

struct HoldoutRow {
  int heldout_domain = 0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  double heldout_loss = 0.0;
  double heldout_accuracy = 0.0;
  /// Across-seed standard deviation of heldout_loss.
  double heldout_loss_std = 0.0;
};

struct LodoResult {
  std::vector<HoldoutRow> rows;
  HoldoutRow average;  // heldout_domain = -1
};

/// One experiment per domain of the config's dataset, each holding that
/// domain out. Needs >= 3 domains.
LodoResult leave_one_domain_out(const ExperimentConfig& config, int workers = 1);

}  // namespace disam

#include "disam/detail/parallel_map.hpp"
