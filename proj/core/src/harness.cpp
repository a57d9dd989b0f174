// Copyright (c) 2026, DISAM contributors
// SPDX-License-Identifier: Apache-2.0

#include "disam/harness.hpp"

#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>
#include <sstream>

#include "disam/rng.hpp"
#include "disam/trace_io.hpp"

namespace disam {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Stream labels under a run seed.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kBatchStream = 2;
// Stream label base under the dataset seed for the validation split.
constexpr std::uint64_t kSplitStream = 0x2000;

std::vector<std::vector<Sample>> chunk_heldout(const std::vector<Sample>& heldout, int batch_size) {
  std::vector<std::vector<Sample>> out;
  const auto b = static_cast<std::size_t>(batch_size);
  for (std::size_t start = 0; start + b <= heldout.size(); start += b) {
    out.emplace_back(heldout.begin() + start, heldout.begin() + start + b);
  }
  if (out.size() < 2 && heldout.size() >= 2) {
    // Too few full batches: fall back to two halves.
    out.clear();
    const std::size_t half = heldout.size() / 2;
    out.emplace_back(heldout.begin(), heldout.begin() + half);
    out.emplace_back(heldout.begin() + half, heldout.end());
  }
  return out;
}

}  // namespace

PreparedData prepare_data(const ExperimentConfig& config) {
  config.validate();
  PreparedData p;
  p.dataset = generate_shifted_clusters(config.problem.dataset);
  for (int d = 0; d < p.dataset.num_domains(); ++d) {
    if (d == config.heldout_domain) {
      p.heldout = p.dataset.domains[d];
      continue;
    }
    p.train_domains.push_back(d);
    std::vector<Sample> dom = p.dataset.domains[d];
    CounterRng rng(config.problem.dataset.seed, kSplitStream + static_cast<std::uint64_t>(d));
    rng.shuffle(std::span<Sample>(dom));
    const auto n_val = static_cast<std::size_t>(std::floor(config.problem.val_fraction * dom.size()));
    if (n_val >= dom.size()) throw ConfigError("val_fraction leaves domain " + std::to_string(d) + " empty");
    p.validation.insert(p.validation.end(), dom.begin(), dom.begin() + n_val);
    p.train.insert(p.train.end(), dom.begin() + n_val, dom.end());
  }
  p.heldout_batches = chunk_heldout(p.heldout, config.batch_size);
  return p;
}

RunResult run_single(const ExperimentConfig& config, const PreparedData& data, std::uint64_t seed) {
  const SoftmaxMLP model(config.problem.dataset.input_dim, config.problem.hidden, config.problem.dataset.num_classes);
  CounterRng init_rng(seed, kInitStream);
  CounterRng batch_rng(seed, kBatchStream);

  OptimizerState state = make_optimizer_state(model.initial_params(init_rng), config.optimizer.mode,
                                              config.optimizer.eta0, config.optimizer.schedule,
                                              config.perturbation(), config.optimizer.beta);

  RunResult result;
  auto& trace = result.trace;
  trace.config_hash = config_hash(config);
  trace.seed = seed;
  trace.train_domains = data.train_domains;
  trace.steps.reserve(static_cast<std::size_t>(config.steps));

  const std::size_t n_train = data.train.size();
  const auto b = static_cast<std::size_t>(config.batch_size);
  const std::size_t batch_len = std::min(b, n_train);
  const std::size_t steps_per_epoch = std::max<std::size_t>(1, n_train / batch_len);
  const double ascent_rho = config.optimizer.rho;

  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Sample> batch;
  batch.reserve(batch_len);

  // Per-epoch accumulators over training domains.
  const std::size_t n_dom = data.train_domains.size();
  std::vector<double> loss_sum(n_dom, 0.0);
  std::vector<int> loss_cnt(n_dom, 0);
  std::int64_t epoch_first = 1;
  std::size_t pos = 0;

  auto close_epoch = [&](std::int64_t last_step) {
    EpochSummary e;
    e.epoch = static_cast<int>(trace.epochs.size()) + 1;
    e.first_step = epoch_first;
    e.last_step = last_step;
    e.mean_domain_loss.resize(n_dom);
    for (std::size_t i = 0; i < n_dom; ++i) e.mean_domain_loss[i] = loss_cnt[i] ? loss_sum[i] / loss_cnt[i] : kNaN;
    if (!data.heldout.empty()) {
      const auto m = heldout_domain_eval(model, state.w, Batch(data.heldout));
      e.heldout_loss = m.loss;
      e.heldout_accuracy = m.accuracy;
      e.sharpness_gradvar = data.heldout_batches.size() >= 2
                                ? estimate_sharpness_gradvar(model, state.w, data.heldout_batches)
                                : 0.0;
      e.sharpness_ascent = estimate_sharpness_ascent(model, state.w, Batch(data.heldout), ascent_rho).value;
    } else {
      e.heldout_loss = e.heldout_accuracy = e.sharpness_gradvar = e.sharpness_ascent = kNaN;
    }
    trace.epochs.push_back(std::move(e));
    std::fill(loss_sum.begin(), loss_sum.end(), 0.0);
    std::fill(loss_cnt.begin(), loss_cnt.end(), 0);
    epoch_first = last_step + 1;
  };

  for (std::int64_t t = 1; t <= config.steps; ++t) {
    if (pos == 0) batch_rng.shuffle(std::span<std::size_t>(order));
    batch.clear();
    for (std::size_t j = pos * batch_len; j < (pos + 1) * batch_len; ++j) batch.push_back(data.train[order[j]]);

    StepRecord rec = step(state, model, batch);
    const bool bad = rec.nonfinite();
    for (std::size_t i = 0; i < rec.present_domains.size(); ++i) {
      const auto slot = static_cast<std::size_t>(
          std::find(data.train_domains.begin(), data.train_domains.end(), rec.present_domains[i]) -
          data.train_domains.begin());
      loss_sum[slot] += rec.losses[i];
      loss_cnt[slot] += 1;
    }
    trace.steps.push_back(std::move(rec));
    if (bad) {
      trace.diverged = true;
      break;
    }
    if (++pos == steps_per_epoch) {
      close_epoch(t);
      pos = 0;
    }
  }
  if (!trace.diverged && pos != 0) close_epoch(static_cast<std::int64_t>(trace.steps.size()));

  auto& s = result.summary;
  s.seed = seed;
  s.diverged = trace.diverged;
  s.steps_run = static_cast<std::int64_t>(trace.steps.size());
  for (const auto& r : trace.steps) {
    if (r.degenerate()) ++s.degenerate_steps;
  }
  s.min_beta = trace.steps.empty() ? 0.0 : std::numeric_limits<double>::infinity();
  for (const auto& r : trace.steps) s.min_beta = std::min(s.min_beta, r.min_beta());

  const auto full = model.eval(state.w, Batch(data.train));
  s.final_train_loss = full.total;
  s.final_domain_losses = full.losses;
  s.final_domain_variance = domain_variance(full.losses);
  if (!std::isfinite(s.final_train_loss)) s.diverged = trace.diverged = true;
  if (!data.validation.empty()) {
    const auto m = heldout_domain_eval(model, state.w, Batch(data.validation));
    s.val_loss = m.loss;
    s.val_accuracy = m.accuracy;
  }
  if (!data.heldout.empty()) {
    const auto m = heldout_domain_eval(model, state.w, Batch(data.heldout));
    s.heldout_loss = m.loss;
    s.heldout_accuracy = m.accuracy;
    if (!trace.epochs.empty()) {
      s.sharpness = trace.epochs.back().sharpness_gradvar;
    } else if (data.heldout_batches.size() >= 2) {
      s.sharpness = estimate_sharpness_gradvar(model, state.w, data.heldout_batches);
    }
  }
  s.median_phi = median_phi(trace, config.steps / 2);
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config, int workers) {
  const PreparedData data = prepare_data(config);
  ExperimentResult out;
  out.config_hash = config_hash(config);
  out.runs = parallel_map<RunResult>(config.seeds.size(), workers,
                                     [&](std::size_t i) { return run_single(config, data, config.seeds[i]); });

  if (!config.output_dir.empty()) {
    namespace fs = std::filesystem;
    const fs::path dir(config.output_dir);
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : out.runs) {
      const std::string stem = "trace_seed" + std::to_string(r.summary.seed);
      std::ostringstream csv;
      write_trace_csv(csv, r.trace);
      write_text_file((dir / (stem + ".csv")).string(), csv.str());
      std::ostringstream epochs;
      write_epochs_csv(epochs, r.trace);
      write_text_file((dir / ("epochs_seed" + std::to_string(r.summary.seed) + ".csv")).string(), epochs.str());
      write_text_file((dir / (stem + ".json")).string(), json_text(trace_metadata(r.trace, config, r.summary)));
      runs.push_back(summary_to_json(r.summary));
    }
    const nlohmann::json summary = {{"format", kFormatVersion},
                                    {"config_hash", out.config_hash},
                                    {"config", to_json(config)},
                                    {"runs", runs}};
    write_text_file((dir / "summary.json").string(), json_text(summary));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps

void SweepGrid::validate() const {
  if (axis != "rho" && axis != "lambda" && axis != "beta") throw ConfigError("sweep axis must be rho, lambda or beta");
  if (values.empty()) throw ConfigError("sweep grid has no values");
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (!std::isfinite(v)) throw ConfigError("sweep values must be finite");
    if (axis == "rho" ? !(v > 0.0) : !(v >= 0.0)) throw ConfigError("sweep value out of range for " + axis);
    if (i > 0 && !(values[i] > values[i - 1])) throw ConfigError("sweep values must be strictly increasing");
  }
  base.validate();
}

ExperimentConfig SweepGrid::cell_config(double value) const {
  ExperimentConfig c = base;
  if (axis == "rho") c.optimizer.rho = value;
  else if (axis == "lambda") c.optimizer.lambda = value;
  else c.optimizer.beta = value;
  c.output_dir.clear();
  c.sweep.reset();
  return c;
}

namespace {

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

SweepResult sweep(const SweepGrid& grid, int workers) {
  grid.validate();
  const PreparedData data = prepare_data(grid.base);
  const std::size_t n_seeds = grid.base.seeds.size();
  std::vector<ExperimentConfig> cells;
  for (double v : grid.values) cells.push_back(grid.cell_config(v));

  const auto summaries = parallel_map<RunSummary>(cells.size() * n_seeds, workers, [&](std::size_t task) {
    const auto& cfg = cells[task / n_seeds];
    return run_single(cfg, data, cfg.seeds[task % n_seeds]).summary;
  });

  SweepResult result;
  result.axis = grid.axis;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    SweepRow row;
    row.value = grid.values[c];
    row.seeds = static_cast<int>(n_seeds);
    std::vector<double> train, ho_loss, ho_acc, sharp, phi;
    for (std::size_t s = 0; s < n_seeds; ++s) {
      const auto& r = summaries[c * n_seeds + s];
      if (r.diverged) {
        ++row.diverged;
        continue;
      }
      train.push_back(r.final_train_loss);
      if (r.heldout_loss) ho_loss.push_back(*r.heldout_loss);
      if (r.heldout_accuracy) ho_acc.push_back(*r.heldout_accuracy);
      if (r.sharpness) sharp.push_back(*r.sharpness);
      if (r.median_phi) phi.push_back(*r.median_phi);
    }
    row.final_train_loss = mean_of(train);
    row.heldout_loss = mean_of(ho_loss);
    row.heldout_accuracy = mean_of(ho_acc);
    row.sharpness = mean_of(sharp);
    row.median_phi = mean_of(phi);
    result.rows.push_back(row);
  }

  if (!grid.base.output_dir.empty()) {
    const std::filesystem::path dir(grid.base.output_dir);
    std::ostringstream csv;
    write_sweep_csv(csv, result);
    write_text_file((dir / "sweep_summary.csv").string(), csv.str());
    auto j = sweep_to_json(result);
    j["config_hash"] = config_hash(grid.base);
    j["config"] = to_json(grid.base);
    write_text_file((dir / "sweep_summary.json").string(), json_text(j));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Max-rho search

BisectionResult bisect_max_feasible(double lo, double hi, double tol, const std::function<bool(double)>& feasible) {
  if (!(lo < hi)) throw std::invalid_argument("bisect_max_feasible: need lo < hi");
  if (!(tol > 0.0)) throw std::invalid_argument("bisect_max_feasible: tol must be > 0");
  BisectionResult r;
  auto probe = [&](double x) {
    const bool ok = feasible(x);
    r.probes.emplace_back(x, ok);
    return ok;
  };
  if (!probe(lo)) {
    r.rho = lo;
    r.monotonicity_unverified = true;
    return r;
  }
  if (probe(hi)) {
    r.rho = hi;
    r.monotonicity_unverified = true;
    return r;
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (probe(mid)) lo = mid;
    else hi = mid;
  }
  r.rho = lo;
  return r;
}

MaxRhoResult max_rho_search(const ExperimentConfig& base, const MaxRhoConfig& search, int workers) {
  base.validate();
  const PreparedData data = prepare_data(base);
  const std::size_t n = base.seeds.size();

  auto final_losses = [&](const ExperimentConfig& cfg) {
    return parallel_map<RunSummary>(n, workers, [&](std::size_t i) { return run_single(cfg, data, cfg.seeds[i]).summary; });
  };

  ExperimentConfig erm = base;
  erm.optimizer.mode = OptimizerMode::kErm;
  MaxRhoResult out;
  for (const auto& s : final_losses(erm)) {
    out.tau.push_back(s.diverged ? -std::numeric_limits<double>::infinity() : search.tau_factor * s.final_train_loss);
  }

  auto feasible = [&](double rho) {
    ExperimentConfig cfg = base;
    cfg.optimizer.rho = rho;
    const auto runs = final_losses(cfg);
    std::size_t ok = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!runs[i].diverged && runs[i].final_train_loss <= out.tau[i]) ++ok;
    }
    return 2 * ok > n;
  };
  out.search = bisect_max_feasible(search.rho_lo, search.rho_hi, search.tol, feasible);
  return out;
}

// ---------------------------------------------------------------------------
// Leave-one-domain-out

LodoResult leave_one_domain_out(const ExperimentConfig& config, int workers) {
  config.validate();
  const int m = config.problem.dataset.num_domains;
  if (m < 3) throw ConfigError("leave-one-domain-out needs at least 3 domains");

  LodoResult out;
  std::vector<double> v_loss, v_acc, h_loss, h_acc, h_std;
  for (int h = 0; h < m; ++h) {
    ExperimentConfig cfg = config;
    cfg.heldout_domain = h;
    if (!config.output_dir.empty()) {
      cfg.output_dir = (std::filesystem::path(config.output_dir) / ("holdout_" + std::to_string(h))).string();
    }
    const auto res = run_experiment(cfg, workers);
    std::vector<double> vl, va, hl, ha;
    for (const auto& r : res.runs) {
      if (r.summary.diverged) continue;
      if (r.summary.val_loss) vl.push_back(*r.summary.val_loss);
      if (r.summary.val_accuracy) va.push_back(*r.summary.val_accuracy);
      if (r.summary.heldout_loss) hl.push_back(*r.summary.heldout_loss);
      if (r.summary.heldout_accuracy) ha.push_back(*r.summary.heldout_accuracy);
    }
    HoldoutRow row;
    row.heldout_domain = h;
    row.val_loss = mean_of(vl);
    row.val_accuracy = mean_of(va);
    row.heldout_loss = mean_of(hl);
    row.heldout_accuracy = mean_of(ha);
    double ss = 0.0;
    for (double x : hl) ss += (x - row.heldout_loss) * (x - row.heldout_loss);
    row.heldout_loss_std = hl.size() > 1 ? std::sqrt(ss / static_cast<double>(hl.size() - 1)) : 0.0;
    out.rows.push_back(row);
    v_loss.push_back(row.val_loss);
    v_acc.push_back(row.val_accuracy);
    h_loss.push_back(row.heldout_loss);
    h_acc.push_back(row.heldout_accuracy);
    h_std.push_back(row.heldout_loss_std);
  }
  out.average = {-1, mean_of(v_loss), mean_of(v_acc), mean_of(h_loss), mean_of(h_acc), mean_of(h_std)};

  if (!config.output_dir.empty()) {
    auto j = lodo_to_json(out);
    j["config_hash"] = config_hash(config);
    write_text_file((std::filesystem::path(config.output_dir) / "lodo_summary.json").string(), json_text(j));
  }
  return out;
}

}  // namespace disam
