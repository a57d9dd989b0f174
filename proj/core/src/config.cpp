// Copyright (c) 2026, DISAM contributors
// SPDX-License-Identifier: Apache-2.0

#include "disam/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "disam/format.hpp"

namespace disam {

using nlohmann::json;

void ExperimentConfig::validate() const {
  if (problem.kind != "mlp") throw ConfigError("problem.kind must be \"mlp\"");
  if (problem.hidden < 1) throw ConfigError("problem.hidden must be >= 1");
  if (!(problem.val_fraction >= 0.0 && problem.val_fraction < 1.0)) {
    throw ConfigError("problem.val_fraction must be in [0, 1)");
  }
  const auto& ds = problem.dataset;
  if (ds.num_domains < 2) throw ConfigError("dataset.num_domains must be >= 2");
  if (ds.num_classes < 2) throw ConfigError("dataset.num_classes must be >= 2");
  if (ds.input_dim < 1) throw ConfigError("dataset.input_dim must be >= 1");
  if (static_cast<int>(ds.per_domain_counts.size()) != ds.num_domains) {
    throw ConfigError("dataset.counts must have one entry per domain");
  }
  for (int n : ds.per_domain_counts) {
    if (n < ds.num_classes) throw ConfigError("dataset.counts entries must be >= num_classes");
  }
  if (!(ds.shift_scale >= 0.0)) throw ConfigError("dataset.shift_scale must be >= 0");
  if (!(ds.difficulty_skew >= 1.0)) throw ConfigError("dataset.difficulty_skew must be >= 1");
  if (heldout_domain < -1 || heldout_domain >= ds.num_domains) {
    throw ConfigError("heldout_domain must be -1 (none) or a valid domain id");
  }
  if (heldout_domain >= 0 && ds.num_domains < 3) {
    throw ConfigError("holding out a domain needs at least 3 domains");
  }
  if (steps < 0) throw ConfigError("steps must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (seeds.empty()) throw ConfigError("seeds must not be empty");

  const auto& o = optimizer;
  if (!(o.eta0 > 0.0) || !std::isfinite(o.eta0)) throw ConfigError("optimizer.eta0 must be > 0");
  if (!(o.rho > 0.0) || !std::isfinite(o.rho)) throw ConfigError("optimizer.rho must be > 0");
  if (!(o.lambda >= 0.0) || !std::isfinite(o.lambda)) throw ConfigError("optimizer.lambda must be >= 0");
  if (!(o.beta >= 0.0) || !std::isfinite(o.beta)) throw ConfigError("optimizer.beta must be >= 0");

  if (sweep) {
    if (sweep->axis != "rho" && sweep->axis != "lambda" && sweep->axis != "beta") {
      throw ConfigError("sweep.axis must be rho, lambda or beta");
    }
  }
  if (max_rho) {
    if (!(max_rho->rho_lo > 0.0 && max_rho->rho_lo < max_rho->rho_hi)) {
      throw ConfigError("max_rho needs 0 < rho_lo < rho_hi");
    }
    if (!(max_rho->tol > 0.0)) throw ConfigError("max_rho.tol must be > 0");
    if (!(max_rho->tau_factor > 0.0)) throw ConfigError("max_rho.tau_factor must be > 0");
  }
}

std::optional<PerturbationSpec> ExperimentConfig::perturbation() const {
  PerturbationSpec spec{optimizer.rho, optimizer.lambda, PerturbationMode::kSam, optimizer.beta};
  switch (optimizer.mode) {
    case OptimizerMode::kSam: spec.mode = PerturbationMode::kSam; return spec;
    case OptimizerMode::kDisam: spec.mode = PerturbationMode::kDisam; return spec;
    case OptimizerMode::kIntuitive: spec.mode = PerturbationMode::kIntuitive; return spec;
    default: return std::nullopt;
  }
}

ExperimentConfig default_config() { return ExperimentConfig{}; }

// ---------------------------------------------------------------------------
// JSON

json to_json(const ExperimentConfig& c) {
  const auto& ds = c.problem.dataset;
  json j = {
      {"problem",
       {{"kind", c.problem.kind},
        {"hidden", c.problem.hidden},
        {"val_fraction", c.problem.val_fraction},
        {"dataset",
         {{"seed", ds.seed},
          {"num_domains", ds.num_domains},
          {"num_classes", ds.num_classes},
          {"input_dim", ds.input_dim},
          {"counts", ds.per_domain_counts},
          {"shift_scale", ds.shift_scale},
          {"difficulty_skew", ds.difficulty_skew}}}}},
      {"optimizer",
       {{"mode", std::string(to_string(c.optimizer.mode))},
        {"rho", c.optimizer.rho},
        {"lambda", c.optimizer.lambda},
        {"beta", c.optimizer.beta},
        {"eta0", c.optimizer.eta0},
        {"schedule", std::string(to_string(c.optimizer.schedule))}}},
      {"steps", c.steps},
      {"batch_size", c.batch_size},
      {"heldout_domain", c.heldout_domain},
      {"seeds", c.seeds},
  };
  if (c.sweep) j["sweep"] = {{"axis", c.sweep->axis}, {"values", c.sweep->values}};
  if (c.max_rho) {
    j["max_rho"] = {{"rho_lo", c.max_rho->rho_lo},
                    {"rho_hi", c.max_rho->rho_hi},
                    {"tol", c.max_rho->tol},
                    {"tau_factor", c.max_rho->tau_factor}};
  }
  return j;
}

namespace {

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : obj.items()) {
    if (!ok.contains(item.key())) throw ConfigError("unknown key '" + where + item.key() + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    const auto& v = obj.at(key);
    if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ConfigError("");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError("");
    }
    out = v.get<T>();
  } catch (const std::exception&) {
    throw ConfigError("bad value for '" + where + key + "'");
  }
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  reject_unknown(j, {"problem", "optimizer", "steps", "batch_size", "heldout_domain", "seeds", "output_dir", "sweep",
                     "max_rho"},
                 "");
  if (j.contains("problem")) {
    const auto& p = j.at("problem");
    reject_unknown(p, {"kind", "hidden", "val_fraction", "dataset"}, "problem.");
    read(p, "kind", c.problem.kind, "problem.");
    read(p, "hidden", c.problem.hidden, "problem.");
    read(p, "val_fraction", c.problem.val_fraction, "problem.");
    if (p.contains("dataset")) {
      const auto& d = p.at("dataset");
      reject_unknown(d, {"seed", "num_domains", "num_classes", "input_dim", "counts", "shift_scale", "difficulty_skew"},
                     "problem.dataset.");
      auto& ds = c.problem.dataset;
      read(d, "seed", ds.seed, "problem.dataset.");
      read(d, "num_domains", ds.num_domains, "problem.dataset.");
      read(d, "num_classes", ds.num_classes, "problem.dataset.");
      read(d, "input_dim", ds.input_dim, "problem.dataset.");
      read(d, "counts", ds.per_domain_counts, "problem.dataset.");
      read(d, "shift_scale", ds.shift_scale, "problem.dataset.");
      read(d, "difficulty_skew", ds.difficulty_skew, "problem.dataset.");
    }
  }
  if (j.contains("optimizer")) {
    const auto& o = j.at("optimizer");
    reject_unknown(o, {"mode", "rho", "lambda", "beta", "eta0", "schedule"}, "optimizer.");
    std::string mode(to_string(c.optimizer.mode));
    std::string schedule(to_string(c.optimizer.schedule));
    read(o, "mode", mode, "optimizer.");
    read(o, "schedule", schedule, "optimizer.");
    try {
      c.optimizer.mode = parse_optimizer_mode(mode);
      c.optimizer.schedule = parse_schedule(schedule);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    read(o, "rho", c.optimizer.rho, "optimizer.");
    read(o, "lambda", c.optimizer.lambda, "optimizer.");
    read(o, "beta", c.optimizer.beta, "optimizer.");
    read(o, "eta0", c.optimizer.eta0, "optimizer.");
  }
  read(j, "steps", c.steps, "");
  read(j, "batch_size", c.batch_size, "");
  read(j, "heldout_domain", c.heldout_domain, "");
  read(j, "seeds", c.seeds, "");
  read(j, "output_dir", c.output_dir, "");
  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    reject_unknown(s, {"axis", "values"}, "sweep.");
    SweepConfig sc;
    read(s, "axis", sc.axis, "sweep.");
    read(s, "values", sc.values, "sweep.");
    c.sweep = sc;
  }
  if (j.contains("max_rho")) {
    const auto& m = j.at("max_rho");
    reject_unknown(m, {"rho_lo", "rho_hi", "tol", "tau_factor"}, "max_rho.");
    MaxRhoConfig mc;
    read(m, "rho_lo", mc.rho_lo, "max_rho.");
    read(m, "rho_hi", mc.rho_hi, "max_rho.");
    read(m, "tol", mc.tol, "max_rho.");
    read(m, "tau_factor", mc.tau_factor, "max_rho.");
    c.max_rho = mc;
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

std::string canonical_config_text(const ExperimentConfig& config) { return to_json(config).dump(); }

std::string config_hash(const ExperimentConfig& config) { return fnv1a_hex(canonical_config_text(config)); }

}  // namespace disam
