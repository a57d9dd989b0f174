// Copyright (c) 2026, DISAM contributors
// SPDX-License-Identifier: Apache-2.0
//
// Trace serialization. One CSV per run with a fixed column order
//   t, eta, loss_total, loss_d<id>..., variance, min_beta, grad_norm,
//   di_grad_norm, phi_t, flags
// (loss_d<id> per training domain, empty when the domain is absent from the
// batch; phi_t empty when undefined; flags '|'-joined names), plus a JSON
// metadata sidecar. Output is byte-stable for a given (config, seed).

#pragma once

#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

#include "disam/config.hpp"
#include "disam/diagnostics.hpp"

namespace disam {

struct RunSummary;
struct SweepResult;
struct LodoResult;
struct MaxRhoResult;

/// Thrown for unwritable output paths.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string flags_to_string(std::uint32_t flags);

void write_trace_csv(std::ostream& out, const TrainingTrace& trace);

/// Per-epoch summaries as CSV.
void write_epochs_csv(std::ostream& out, const TrainingTrace& trace);

nlohmann::json summary_to_json(const RunSummary& summary);

nlohmann::json trace_metadata(const TrainingTrace& trace, const ExperimentConfig& config,
                              const RunSummary& summary);

void write_sweep_csv(std::ostream& out, const SweepResult& result);
nlohmann::json sweep_to_json(const SweepResult& result);
nlohmann::json lodo_to_json(const LodoResult& result);
nlohmann::json max_rho_to_json(const MaxRhoResult& result);

/// Writes text to path, creating parent directories. Throws IoError.
void write_text_file(const std::string& path, const std::string& text);

/// Pretty JSON with a trailing newline.
std::string json_text(const nlohmann::json& j);

inline constexpr const char* kFormatVersion = "disam-trace/1";

}  // namespace disam
