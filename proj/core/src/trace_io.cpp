// Copyright (c) 2026, DISAM contributors
// SPDX-License-Identifier: Apache-2.0

#include "disam/trace_io.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "disam/format.hpp"
#include "disam/harness.hpp"

namespace disam {

using nlohmann::json;

std::string flags_to_string(std::uint32_t flags) {
  std::string out;
  auto add = [&](const char* name) {
    if (!out.empty()) out += '|';
    out += name;
  };
  if (flags & step_flags::kDegenerate) add("degenerate");
  if (flags & step_flags::kNonFinite) add("nonfinite");
  return out;
}

void write_trace_csv(std::ostream& out, const TrainingTrace& trace) {
  out << "t,eta,loss_total";
  for (int d : trace.train_domains) out << ",loss_d" << d;
  out << ",variance,min_beta,grad_norm,di_grad_norm,phi_t,flags\n";
  for (const auto& s : trace.steps) {
    out << s.t << ',' << format_double(s.eta) << ',' << format_double(s.total);
    for (int d : trace.train_domains) {
      out << ',';
      const auto it = std::find(s.present_domains.begin(), s.present_domains.end(), d);
      if (it != s.present_domains.end()) out << format_double(s.losses[it - s.present_domains.begin()]);
    }
    out << ',' << format_double(s.variance) << ',' << format_double(s.min_beta()) << ','
        << format_double(s.grad_norm) << ',' << format_double(s.di_grad_norm) << ',';
    if (s.phi) out << format_double(*s.phi);
    out << ',' << flags_to_string(s.flags) << '\n';
  }
}

void write_epochs_csv(std::ostream& out, const TrainingTrace& trace) {
  out << "epoch,first_step,last_step";
  for (int d : trace.train_domains) out << ",mean_loss_d" << d;
  out << ",heldout_loss,heldout_accuracy,sharpness_gradvar,sharpness_ascent\n";
  for (const auto& e : trace.epochs) {
    out << e.epoch << ',' << e.first_step << ',' << e.last_step;
    for (double v : e.mean_domain_loss) out << ',' << format_double(v);
    out << ',' << format_double(e.heldout_loss) << ',' << format_double(e.heldout_accuracy) << ','
        << format_double(e.sharpness_gradvar) << ',' << format_double(e.sharpness_ascent) << '\n';
  }
}

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json summary_to_json(const RunSummary& s) {
  return {
      {"seed", s.seed},
      {"diverged", s.diverged},
      {"steps_run", s.steps_run},
      {"final_train_loss", finite_or_null(s.final_train_loss)},
      {"final_domain_losses", s.final_domain_losses},
      {"final_domain_variance", finite_or_null(s.final_domain_variance)},
      {"val_loss", opt(s.val_loss)},
      {"val_accuracy", opt(s.val_accuracy)},
      {"heldout_loss", opt(s.heldout_loss)},
      {"heldout_accuracy", opt(s.heldout_accuracy)},
      {"sharpness_gradvar", opt(s.sharpness)},
      {"median_phi", opt(s.median_phi)},
      {"degenerate_steps", s.degenerate_steps},
      {"min_beta", finite_or_null(s.min_beta)},
  };
}

json trace_metadata(const TrainingTrace& trace, const ExperimentConfig& config, const RunSummary& summary) {
  return {
      {"format", kFormatVersion},
      {"config_hash", trace.config_hash},
      {"config", to_json(config)},
      {"seed", trace.seed},
      {"status", trace.diverged ? "DIVERGED" : "OK"},
      {"train_domains", trace.train_domains},
      {"steps_recorded", trace.steps.size()},
      {"epochs_recorded", trace.epochs.size()},
      {"summary", summary_to_json(summary)},
  };
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
  out << result.axis
      << ",seeds,diverged,final_train_loss,heldout_loss,heldout_accuracy,sharpness_gradvar,median_phi\n";
  for (const auto& r : result.rows) {
    out << format_double(r.value) << ',' << r.seeds << ',' << r.diverged << ',' << format_double(r.final_train_loss)
        << ',' << format_double(r.heldout_loss) << ',' << format_double(r.heldout_accuracy) << ','
        << format_double(r.sharpness) << ',' << format_double(r.median_phi) << '\n';
  }
}

json sweep_to_json(const SweepResult& result) {
  json rows = json::array();
  for (const auto& r : result.rows) {
    rows.push_back({{"value", r.value},
                    {"seeds", r.seeds},
                    {"diverged", r.diverged},
                    {"final_train_loss", finite_or_null(r.final_train_loss)},
                    {"heldout_loss", finite_or_null(r.heldout_loss)},
                    {"heldout_accuracy", finite_or_null(r.heldout_accuracy)},
                    {"sharpness_gradvar", finite_or_null(r.sharpness)},
                    {"median_phi", finite_or_null(r.median_phi)}});
  }
  return {{"format", kFormatVersion}, {"axis", result.axis}, {"rows", rows}};
}

namespace {

json holdout_json(const HoldoutRow& r) {
  return {{"heldout_domain", r.heldout_domain},
          {"val_loss", finite_or_null(r.val_loss)},
          {"val_accuracy", finite_or_null(r.val_accuracy)},
          {"heldout_loss", finite_or_null(r.heldout_loss)},
          {"heldout_accuracy", finite_or_null(r.heldout_accuracy)},
          {"heldout_loss_std", finite_or_null(r.heldout_loss_std)}};
}

}  // namespace

json lodo_to_json(const LodoResult& result) {
  json rows = json::array();
  for (const auto& r : result.rows) rows.push_back(holdout_json(r));
  return {{"format", kFormatVersion}, {"holdouts", rows}, {"average", holdout_json(result.average)}};
}

json max_rho_to_json(const MaxRhoResult& result) {
  json probes = json::array();
  for (const auto& [rho, ok] : result.search.probes) probes.push_back({{"rho", rho}, {"feasible", ok}});
  json j = {{"format", kFormatVersion},
            {"max_rho", result.search.rho},
            {"tau", result.tau},
            {"probes", probes},
            {"flags", json::array()}};
  if (result.search.monotonicity_unverified) j["flags"].push_back("MONOTONICITY_UNVERIFIED");
  return j;
}

void write_text_file(const std::string& path, const std::string& text) {
  namespace fs = std::filesystem;
  std::error_code ec;
  const fs::path p(path);
  if (p.has_parent_path()) {
    fs::create_directories(p.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + p.parent_path().string() + "': " + ec.message());
  }
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path + "'");
}

std::string json_text(const json& j) { return j.dump(2) + "\n"; }

}  // namespace disam
