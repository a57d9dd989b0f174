// Copyright (c) 2026, DISAM contributors
// SPDX-License-Identifier: Apache-2.0
//
// Differentiable multi-domain test problems. Each Problem maps parameters and
// a batch to per-domain losses L_i(w) with exact analytic gradients.

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "disam/domain_objective.hpp"
#include "disam/param_math.hpp"

namespace disam {

class CounterRng;

/// Invalid problem or dataset parameters.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Sample {
  std::vector<double> features;
  int label = 0;
  int domain = 0;

  bool operator==(const Sample&) const = default;
};

/// A batch may mix domains in any order and may omit domains entirely.
using Batch = std::span<const Sample>;

/// M per-domain sample collections; domains[i] holds the samples whose
/// domain id is i.
struct DomainDataset {
  int num_classes = 0;
  int input_dim = 0;
  std::vector<std::vector<Sample>> domains;

  int num_domains() const noexcept { return static_cast<int>(domains.size()); }
  std::size_t total_size() const noexcept;

  /// alpha_i = n_i / N over all domains.
  std::vector<double> domain_weights() const;

  /// Throws ConfigError on M < 2, an empty domain, a mislabelled domain id,
  /// a label outside [0, C) or a feature vector of the wrong length.
  void validate() const;

  bool operator==(const DomainDataset&) const = default;
};

struct ShiftedClusterSpec {
  std::uint64_t seed = 0;
  int num_domains = 4;
  int num_classes = 3;
  int input_dim = 2;
  std::vector<int> per_domain_counts{400, 300, 200, 100};
  double shift_scale = 0.6;
  double difficulty_skew = 1.6;
};

/// Class clusters whose geometry drifts with the domain index. Domain i's
/// centroids are rotated by i * shift_scale * kShiftRotation radians and
/// translated by i * shift_scale * kShiftTranslation along the diagonal; the
/// within-class noise variance is kBaseNoise^2 * difficulty_skew^i, so later
/// domains are harder. shift_scale = 0 and difficulty_skew = 1 give M draws
/// from one distribution.
DomainDataset generate_shifted_clusters(const ShiftedClusterSpec& spec);

inline constexpr double kClusterRadius = 2.0;
inline constexpr double kBaseNoise = 0.6;
inline constexpr double kShiftRotation = 0.5;
inline constexpr double kShiftTranslation = 1.0;

/// Columnar text format, one sample per line:
///   # disam-dataset v1 domains=<M> classes=<C> dim=<d>
///   <domain> <label> <f_0> ... <f_{d-1}>
/// Doubles are written in shortest round-trip form, so export/import is exact.
void write_dataset(std::ostream& out, const DomainDataset& data);
DomainDataset read_dataset(std::istream& in);

class Problem {
 public:
  virtual ~Problem() = default;
  virtual std::size_t param_dim() const = 0;
  /// Per-domain losses and gradients at w. Domains absent from the batch are
  /// omitted from the report. Deterministic in (w, batch).
  virtual DomainLossReport eval(const ParamVector& w, Batch batch) const = 0;
};

/// L_i(w) = 1/2 (w - c_i)^T A_i (w - c_i) + b_i with fixed domain weights.
/// The batch argument is ignored; every domain is always present.
class QuadraticDomains final : public Problem {
 public:
  struct Domain {
    ParamVector center;
    /// Row-major k x k, symmetric positive definite.
    std::vector<double> curvature;
    double offset = 0.0;
  };

  /// Uniform domain weights when weights is empty.
  explicit QuadraticDomains(std::vector<Domain> domains, std::vector<double> weights = {});

  std::size_t param_dim() const override { return dim_; }
  DomainLossReport eval(const ParamVector& w, Batch batch = {}) const override;

  const std::vector<Domain>& domains() const noexcept { return domains_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  /// Convenience for diagonal curvature.
  static Domain diagonal(ParamVector center, std::span<const double> diag, double offset = 0.0);

 private:
  std::size_t dim_ = 0;
  std::vector<Domain> domains_;
  std::vector<double> weights_;
};

DomainLossReport eval_quadratic(const QuadraticDomains& q, const ParamVector& w);

/// One tanh hidden layer followed by a softmax cross-entropy head.
/// Parameter layout: W1 (hidden x input, row-major), b1 (hidden),
/// W2 (classes x hidden, row-major), b2 (classes), so
/// k = (input + 1) * hidden + (hidden + 1) * classes.
class SoftmaxMLP final : public Problem {
 public:
  SoftmaxMLP(int input_dim, int hidden, int classes);

  std::size_t param_dim() const override;
  DomainLossReport eval(const ParamVector& w, Batch batch) const override;

  int input_dim() const noexcept { return input_dim_; }
  int hidden() const noexcept { return hidden_; }
  int classes() const noexcept { return classes_; }

  /// Logits for one feature vector.
  std::vector<double> logits(const ParamVector& w, std::span<const double> x) const;
  int predict(const ParamVector& w, std::span<const double> x) const;

  /// Mean cross-entropy over samples, ignoring domains.
  double mean_loss(const ParamVector& w, Batch samples) const;

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
  ParamVector initial_params(CounterRng& rng) const;

 private:
  void check(const ParamVector& w) const;

  int input_dim_;
  int hidden_;
  int classes_;
};

DomainLossReport eval_mlp(const SoftmaxMLP& m, const ParamVector& w, Batch batch);

}  // namespace disam
