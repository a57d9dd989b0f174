// Copyright (c) 2026, DISAM contributors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "disam/config.hpp"
#include "disam/harness.hpp"
#include "disam/trace_io.hpp"

namespace disam {
namespace {

namespace fs = std::filesystem;

ExperimentConfig small_config() {
  ExperimentConfig c = default_config();
  c.steps = 120;
  c.seeds = {0, 1, 2};
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("disam_test_" + name);
  fs::remove_all(p);
  return p;
}

TEST(Config, JsonRoundTrip) {
  ExperimentConfig c = default_config();
  c.optimizer.mode = OptimizerMode::kIntuitive;
  c.optimizer.beta = 0.3;
  c.sweep = SweepConfig{"lambda", {0.0, 0.1, 1.0}};
  c.max_rho = MaxRhoConfig{};
  const auto back = config_from_json(to_json(c));
  EXPECT_EQ(canonical_config_text(back), canonical_config_text(c));
  EXPECT_EQ(config_hash(back), config_hash(c));
}

TEST(Config, PartialJsonUsesDefaults) {
  const auto c = config_from_json(nlohmann::json::parse(R"({"steps": 10, "optimizer": {"mode": "sam"}})"));
  EXPECT_EQ(c.steps, 10);
  EXPECT_EQ(c.optimizer.mode, OptimizerMode::kSam);
  EXPECT_EQ(c.optimizer.rho, 0.05);
  EXPECT_EQ(c.batch_size, 32);
}

TEST(Config, RejectsUnknownKeysAtAnyLevel) {
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"stepz": 10})")), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"optimizer": {"momentum": 0.9}})")), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"problem": {"dataset": {"noise": 1}}})")), ConfigError);
}

TEST(Config, RejectsInvalidValues) {
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"optimizer": {"rho": -1}})")), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"optimizer": {"mode": "adam"}})")), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"heldout_domain": 9})")), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"steps": "ten"})")), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"problem": {"kind": "quadratic"}})")), ConfigError);
}

TEST(Config, OutputDirDoesNotAffectHash) {
  ExperimentConfig a = default_config(), b = default_config();
  b.output_dir = "/tmp/elsewhere";
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.optimizer.lambda = 0.2;
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Config, LoadMissingFileIsIoError) {
  EXPECT_THROW(load_config("/nonexistent/config.json"), std::runtime_error);
}

TEST(PrepareData, SplitsAreDisjointAndComplete) {
  const auto c = default_config();
  const auto d = prepare_data(c);
  EXPECT_EQ(d.train_domains, (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(d.heldout.size(), 400u);
  EXPECT_EQ(d.train.size() + d.validation.size(), 600u);
  EXPECT_EQ(d.validation.size(), 60u + 40u + 20u);
  for (const auto& s : d.train) EXPECT_NE(s.domain, 0);
  EXPECT_GE(d.heldout_batches.size(), 2u);
}

TEST(RunSingle, ZeroStepsGivesEmptyTrace) {
  auto c = small_config();
  c.steps = 0;
  const auto data = prepare_data(c);
  const auto r = run_single(c, data, 0);
  EXPECT_TRUE(r.trace.steps.empty());
  EXPECT_TRUE(r.trace.epochs.empty());
  EXPECT_FALSE(r.trace.diverged);
  EXPECT_NO_THROW(validate(r.trace));
}

TEST(RunSingle, DisamLambdaZeroMatchesSamPayload) {
  auto c = small_config();
  c.optimizer.mode = OptimizerMode::kSam;
  const auto data = prepare_data(c);
  const auto sam = run_single(c, data, 4);
  c.optimizer.mode = OptimizerMode::kDisam;
  c.optimizer.lambda = 0.0;
  const auto disam = run_single(c, data, 4);
  EXPECT_EQ(sam.trace.steps, disam.trace.steps);
  std::ostringstream a, b;
  write_trace_csv(a, sam.trace);
  write_trace_csv(b, disam.trace);
  EXPECT_EQ(a.str(), b.str());
}

TEST(RunSingle, DivergenceStopsRunAndIsFlagged) {
  auto c = small_config();
  c.optimizer.mode = OptimizerMode::kErm;
  c.optimizer.eta0 = 1e308;
  c.optimizer.schedule = Schedule::kConstant;
  const auto data = prepare_data(c);
  const auto r = run_single(c, data, 0);
  EXPECT_TRUE(r.trace.diverged);
  EXPECT_TRUE(r.summary.diverged);
  ASSERT_FALSE(r.trace.steps.empty());
  EXPECT_TRUE(r.trace.steps.back().nonfinite());
  EXPECT_LT(r.trace.steps.size(), 120u);
  EXPECT_NO_THROW(validate(r.trace));
}

TEST(TraceCsv, HeaderAndEmptyPhiAtFirstStep) {
  auto c = small_config();
  c.steps = 3;
  const auto data = prepare_data(c);
  std::ostringstream out;
  write_trace_csv(out, run_single(c, data, 0).trace);
  std::istringstream in(out.str());
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  EXPECT_EQ(header, "t,eta,loss_total,loss_d1,loss_d2,loss_d3,variance,min_beta,grad_norm,di_grad_norm,phi_t,flags");
  EXPECT_EQ(first.substr(first.size() - 2), ",,");
}

TEST(RunExperiment, OutputsAreByteIdenticalAcrossRepeats) {
  auto c = small_config();
  const auto d1 = fresh_dir("repeat_a"), d2 = fresh_dir("repeat_b");
  c.output_dir = d1.string();
  run_experiment(c, 1);
  c.output_dir = d2.string();
  run_experiment(c, 3);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(d1)) {
    ++files;
    EXPECT_EQ(slurp(e.path()), slurp(d2 / e.path().filename())) << e.path().filename();
  }
  EXPECT_EQ(files, 3u * 3 + 1);
  const auto summary = nlohmann::json::parse(slurp(d1 / "summary.json"));
  EXPECT_EQ(summary["runs"].size(), 3u);
  EXPECT_EQ(summary["config_hash"], config_hash(c));
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST(Bisection, ScriptedPredicate) {
  const auto r = bisect_max_feasible(0.01, 3.0, 0.01, [](double rho) { return rho <= 0.13; });
  EXPECT_FALSE(r.monotonicity_unverified);
  EXPECT_LE(r.rho, 0.13);
  EXPECT_GE(r.rho, 0.13 - 0.01);
}

TEST(Bisection, EndpointCasesAreFlagged) {
  const auto all = bisect_max_feasible(0.01, 3.0, 0.01, [](double) { return true; });
  EXPECT_EQ(all.rho, 3.0);
  EXPECT_TRUE(all.monotonicity_unverified);
  const auto none = bisect_max_feasible(0.01, 3.0, 0.01, [](double) { return false; });
  EXPECT_EQ(none.rho, 0.01);
  EXPECT_TRUE(none.monotonicity_unverified);
}

TEST(Sweep, SingleValueMatchesRunExperiment) {
  SweepGrid g{"rho", {0.07}, small_config()};
  const auto s = sweep(g, 1);
  ASSERT_EQ(s.rows.size(), 1u);
  auto c = small_config();
  c.optimizer.rho = 0.07;
  const auto e = run_experiment(c, 1);
  double mean = 0.0;
  for (const auto& r : e.runs) mean += r.summary.final_train_loss;
  mean /= e.runs.size();
  EXPECT_NEAR(s.rows[0].final_train_loss, mean, 1e-15);
}

TEST(Sweep, LambdaZeroRowEqualsSamBaseline) {
  SweepGrid g{"lambda", {0.0, 0.1}, small_config()};
  const auto s = sweep(g, 1);
  auto c = small_config();
  c.optimizer.mode = OptimizerMode::kSam;
  SweepGrid sam_grid{"rho", {c.optimizer.rho}, c};
  const auto sam = sweep(sam_grid, 1);
  EXPECT_EQ(s.rows[0].final_train_loss, sam.rows[0].final_train_loss);
  EXPECT_EQ(s.rows[0].heldout_loss, sam.rows[0].heldout_loss);
  EXPECT_EQ(s.rows[0].median_phi, sam.rows[0].median_phi);
}

TEST(Sweep, IsolationAndWorkerIndependence) {
  SweepGrid full{"rho", {0.02, 0.05, 0.1, 0.3}, small_config()};
  SweepGrid reduced{"rho", {0.02, 0.1, 0.3}, small_config()};
  const auto a = sweep(full, 1);
  const auto b = sweep(full, 4);
  const auto r = sweep(reduced, 2);
  std::ostringstream ca, cb;
  write_sweep_csv(ca, a);
  write_sweep_csv(cb, b);
  EXPECT_EQ(ca.str(), cb.str());
  ASSERT_EQ(r.rows.size(), 3u);
  const std::size_t map[] = {0, 2, 3};
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(r.rows[i].value, a.rows[map[i]].value);
    EXPECT_EQ(r.rows[i].final_train_loss, a.rows[map[i]].final_train_loss);
    EXPECT_EQ(r.rows[i].sharpness, a.rows[map[i]].sharpness);
  }
}

TEST(Sweep, DivergedCellRecordedAndSweepContinues) {
  auto c = small_config();
  c.optimizer.schedule = Schedule::kConstant;
  SweepGrid g{"rho", {0.05, 1e308}, c};
  const auto s = sweep(g, 1);
  ASSERT_EQ(s.rows.size(), 2u);
  EXPECT_EQ(s.rows[0].diverged, 0);
  EXPECT_EQ(s.rows[1].diverged, 3);
  EXPECT_TRUE(std::isnan(s.rows[1].final_train_loss));
}

TEST(Sweep, InvalidGridRejected) {
  EXPECT_THROW(sweep(SweepGrid{"rho", {0.1, 0.05}, small_config()}), ConfigError);
  EXPECT_THROW(sweep(SweepGrid{"rho", {}, small_config()}), ConfigError);
  EXPECT_THROW(sweep(SweepGrid{"gamma", {0.1}, small_config()}), ConfigError);
}

TEST(Lodo, OneRunPerDomain) {
  auto c = small_config();
  c.problem.dataset.num_domains = 3;
  c.problem.dataset.per_domain_counts = {150, 120, 90};
  c.seeds = {0, 1};
  const auto r = leave_one_domain_out(c, 2);
  ASSERT_EQ(r.rows.size(), 3u);
  double mean = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(r.rows[i].heldout_domain, static_cast<int>(i));
    mean += r.rows[i].heldout_loss;
  }
  EXPECT_EQ(r.average.heldout_domain, -1);
  EXPECT_NEAR(r.average.heldout_loss, mean / 3, 1e-15);
}

TEST(Lodo, SymmetricDomainsAgreeWithinSeedNoise) {
  auto c = default_config();
  c.steps = 600;
  c.seeds = {0, 1, 2, 3, 4};
  c.problem.dataset.shift_scale = 0.0;
  c.problem.dataset.difficulty_skew = 1.0;
  c.problem.dataset.per_domain_counts = {250, 250, 250, 250};
  const auto r = leave_one_domain_out(c, 2);
  double lo = r.rows[0].heldout_loss, hi = lo, noise = 0.0;
  for (const auto& row : r.rows) {
    lo = std::min(lo, row.heldout_loss);
    hi = std::max(hi, row.heldout_loss);
    noise = std::max(noise, row.heldout_loss_std);
  }
  EXPECT_LT(hi - lo, 3.0 * noise);
}

TEST(Lodo, ShiftedDomainsGeneraliseWorseOutOfDomain) {
  auto c = default_config();
  c.steps = 600;
  c.seeds = {0, 1, 2};
  const auto r = leave_one_domain_out(c, 2);
  EXPECT_GE(r.average.heldout_loss, r.average.val_loss);
}

TEST(Lodo, NeedsThreeDomains) {
  auto c = small_config();
  c.problem.dataset.num_domains = 2;
  c.problem.dataset.per_domain_counts = {100, 100};
  c.heldout_domain = 0;
  EXPECT_THROW(leave_one_domain_out(c, 1), ConfigError);
}

TEST(MaxRho, FlagsAndThresholds) {
  auto c = small_config();
  c.optimizer.mode = OptimizerMode::kSam;
  const auto r = max_rho_search(c, MaxRhoConfig{0.01, 3.0, 0.05, 1.05}, 2);
  EXPECT_EQ(r.tau.size(), 3u);
  EXPECT_GE(r.search.rho, 0.01);
  EXPECT_LE(r.search.rho, 3.0);
  const auto j = max_rho_to_json(r);
  EXPECT_EQ(j["max_rho"], r.search.rho);
}

}  // namespace
}  // namespace disam
