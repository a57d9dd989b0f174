// Copyright (c) 2026, DISAM contributors
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "check_suite.hpp"
#include "disam/config.hpp"
#include "disam/diagnostics.hpp"
#include "disam/format.hpp"
#include "disam/harness.hpp"
#include "disam/trace_io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitConfig = 2;

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> seeds;
  std::string out;
  int workers = 1;
  std::optional<double> rho;
  std::optional<double> lambda;
  std::optional<double> beta;
  std::optional<std::string> mode;
  std::optional<std::int64_t> steps;
  std::optional<int> heldout;
};

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("--config", o.config_path, "JSON experiment config")->check(CLI::ExistingFile);
  app->add_option("--seed", o.seed, "root seed (first seed of the run)");
  app->add_option("--seeds", o.seeds, "number of consecutive seeds")->check(CLI::PositiveNumber);
  app->add_option("--out", o.out, "output directory");
  app->add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
  app->add_option("--rho", o.rho, "perturbation radius");
  app->add_option("--lambda", o.lambda, "variance weight in the perturbation");
  app->add_option("--beta", o.beta, "INTUITIVE convergence weight or V-REx penalty");
  app->add_option("--mode", o.mode, "optimizer")
      ->check(CLI::IsMember({"erm", "sam", "disam", "intuitive", "vrex"}));
  app->add_option("--steps", o.steps, "optimizer steps per run")->check(CLI::NonNegativeNumber);
  app->add_option("--heldout", o.heldout, "held-out domain id");
}

disam::ExperimentConfig resolve(const CommonOptions& o) {
  disam::ExperimentConfig c = o.config_path.empty() ? disam::default_config() : disam::load_config(o.config_path);
  if (o.seed || o.seeds) {
    const std::uint64_t first = o.seed.value_or(c.seeds.empty() ? 0 : c.seeds.front());
    const int n = o.seeds.value_or(o.seed ? 1 : static_cast<int>(c.seeds.size()));
    c.seeds.clear();
    for (int i = 0; i < n; ++i) c.seeds.push_back(first + static_cast<std::uint64_t>(i));
  }
  if (!o.out.empty()) c.output_dir = o.out;
  if (o.rho) c.optimizer.rho = *o.rho;
  if (o.lambda) c.optimizer.lambda = *o.lambda;
  if (o.beta) c.optimizer.beta = *o.beta;
  if (o.mode) c.optimizer.mode = disam::parse_optimizer_mode(*o.mode);
  if (o.steps) c.steps = *o.steps;
  if (o.heldout) c.heldout_domain = *o.heldout;
  c.validate();
  return c;
}

std::string fmt(const std::optional<double>& v) { return v ? disam::format_double(*v) : "-"; }

int cmd_run(const CommonOptions& o) {
  const auto config = resolve(o);
  const auto result = disam::run_experiment(config, o.workers);
  std::cout << "config_hash " << result.config_hash << '\n';
  std::cout << "seed,diverged,train_loss,variance,heldout_loss,heldout_acc,sharpness,median_phi\n";
  for (const auto& r : result.runs) {
    disam::validate(r.trace);
    const auto& s = r.summary;
    std::cout << s.seed << ',' << (s.diverged ? "DIVERGED" : "ok") << ',' << disam::format_double(s.final_train_loss)
              << ',' << disam::format_double(s.final_domain_variance) << ',' << fmt(s.heldout_loss) << ','
              << fmt(s.heldout_accuracy) << ',' << fmt(s.sharpness) << ',' << fmt(s.median_phi) << '\n';
  }
  return kExitOk;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const auto token = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    try {
      out.push_back(disam::parse_double(token));
    } catch (const std::invalid_argument&) {
      throw disam::ConfigError("bad sweep value: '" + token + "'");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

int cmd_sweep(const CommonOptions& o, const std::string& axis, const std::string& values) {
  const auto config = resolve(o);
  disam::SweepGrid grid;
  grid.base = config;
  if (!values.empty()) {
    grid.axis = axis.empty() ? "rho" : axis;
    grid.values = parse_values(values);
  } else if (config.sweep) {
    grid.axis = axis.empty() ? config.sweep->axis : axis;
    grid.values = config.sweep->values;
  } else {
    throw disam::ConfigError("sweep needs --values or a 'sweep' block in the config");
  }
  const auto result = disam::sweep(grid, o.workers);
  disam::write_sweep_csv(std::cout, result);
  return kExitOk;
}

int cmd_max_rho(const CommonOptions& o, const std::optional<double>& lo, const std::optional<double>& hi,
                const std::optional<double>& tol, const std::optional<double>& tau_factor) {
  const auto config = resolve(o);
  disam::MaxRhoConfig search = config.max_rho.value_or(disam::MaxRhoConfig{});
  if (lo) search.rho_lo = *lo;
  if (hi) search.rho_hi = *hi;
  if (tol) search.tol = *tol;
  if (tau_factor) search.tau_factor = *tau_factor;
  const auto result = disam::max_rho_search(config, search, o.workers);
  const auto j = disam::max_rho_to_json(result);
  if (!config.output_dir.empty()) {
    disam::write_text_file((std::filesystem::path(config.output_dir) / "max_rho.json").string(), disam::json_text(j));
  }
  std::cout << "max_rho " << disam::format_double(result.search.rho);
  if (result.search.monotonicity_unverified) std::cout << " MONOTONICITY_UNVERIFIED";
  std::cout << '\n';
  return kExitOk;
}

int cmd_lodo(const CommonOptions& o) {
  const auto config = resolve(o);
  const auto result = disam::leave_one_domain_out(config, o.workers);
  std::cout << "heldout,val_loss,val_acc,heldout_loss,heldout_acc,heldout_loss_std\n";
  auto row = [](const disam::HoldoutRow& r, const std::string& id) {
    std::cout << id << ',' << disam::format_double(r.val_loss) << ',' << disam::format_double(r.val_accuracy) << ','
              << disam::format_double(r.heldout_loss) << ',' << disam::format_double(r.heldout_accuracy) << ','
              << disam::format_double(r.heldout_loss_std) << '\n';
  };
  for (const auto& r : result.rows) row(r, std::to_string(r.heldout_domain));
  row(result.average, "avg");
  return kExitOk;
}

int cmd_export_dataset(const CommonOptions& o, const std::string& path) {
  const auto config = resolve(o);
  const auto data = disam::generate_shifted_clusters(config.problem.dataset);
  std::ofstream f(path);
  if (!f) throw disam::IoError("cannot open " + path);
  disam::write_dataset(f, data);
  if (!f) throw disam::IoError("write failed: " + path);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DISAM toy-experiment harness"};
  app.require_subcommand(1);

  CommonOptions run_opts, sweep_opts, rho_opts, lodo_opts, export_opts;

  auto* run = app.add_subcommand("run", "train every seed and write traces");
  add_common(run, run_opts);

  auto* sweep = app.add_subcommand("sweep", "sweep one hyperparameter over a grid");
  add_common(sweep, sweep_opts);
  std::string axis, values;
  sweep->add_option("--axis", axis, "rho | lambda | beta")->check(CLI::IsMember({"rho", "lambda", "beta"}));
  sweep->add_option("--values", values, "comma-separated grid, strictly increasing");

  auto* max_rho = app.add_subcommand("max-rho", "largest rho keeping training loss near ERM");
  add_common(max_rho, rho_opts);
  std::optional<double> rho_lo, rho_hi, tol, tau_factor;
  max_rho->add_option("--rho-lo", rho_lo);
  max_rho->add_option("--rho-hi", rho_hi);
  max_rho->add_option("--tol", tol);
  max_rho->add_option("--tau-factor", tau_factor);

  auto* lodo = app.add_subcommand("lodo", "leave-one-domain-out evaluation");
  add_common(lodo, lodo_opts);

  auto* check = app.add_subcommand("check", "run built-in oracle checks");

  auto* export_ds = app.add_subcommand("export-dataset", "write the generated dataset as text");
  add_common(export_ds, export_opts);
  std::string export_path;
  export_ds->add_option("path", export_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_opts);
    if (*sweep) return cmd_sweep(sweep_opts, axis, values);
    if (*max_rho) return cmd_max_rho(rho_opts, rho_lo, rho_hi, tol, tau_factor);
    if (*lodo) return cmd_lodo(lodo_opts);
    if (*check) return disam::tools::run_check_suite(std::cout) == 0 ? kExitOk : kExitValidation;
    if (*export_ds) return cmd_export_dataset(export_opts, export_path);
  } catch (const disam::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const disam::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::logic_error& e) {
    std::cerr << "validation failure: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitOk;
}
