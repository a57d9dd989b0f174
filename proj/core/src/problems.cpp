// Copyright (c) 2026, DISAM contributors
// SPDX-License-Identifier: Apache-2.0

#include "disam/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "disam/rng.hpp"

namespace disam {

std::size_t DomainDataset::total_size() const noexcept {
  std::size_t n = 0;
  for (const auto& d : domains) n += d.size();
  return n;
}

std::vector<double> DomainDataset::domain_weights() const {
  const auto n = static_cast<double>(total_size());
  std::vector<double> alpha;
  alpha.reserve(domains.size());
  for (const auto& d : domains) alpha.push_back(static_cast<double>(d.size()) / n);
  return alpha;
}

void DomainDataset::validate() const {
  if (num_domains() < 2) throw ConfigError("dataset needs at least 2 domains");
  if (num_classes < 2) throw ConfigError("dataset needs at least 2 classes");
  if (input_dim < 1) throw ConfigError("dataset input_dim must be >= 1");
  for (int i = 0; i < num_domains(); ++i) {
    if (domains[i].empty()) throw ConfigError("domain " + std::to_string(i) + " is empty");
    for (const auto& s : domains[i]) {
      if (s.domain != i) throw ConfigError("sample filed under domain " + std::to_string(i) +
                                           " carries domain id " + std::to_string(s.domain));
      if (s.label < 0 || s.label >= num_classes) throw ConfigError("label out of range");
      if (static_cast<int>(s.features.size()) != input_dim) throw ConfigError("feature length mismatch");
    }
  }
}

DomainDataset generate_shifted_clusters(const ShiftedClusterSpec& spec) {
  if (spec.num_domains < 2) throw ConfigError("generate_shifted_clusters: M must be >= 2");
  if (spec.num_classes < 2) throw ConfigError("generate_shifted_clusters: C must be >= 2");
  if (spec.input_dim < 1) throw ConfigError("generate_shifted_clusters: d_in must be >= 1");
  if (static_cast<int>(spec.per_domain_counts.size()) != spec.num_domains) {
    throw ConfigError("generate_shifted_clusters: need one count per domain");
  }
  for (int n : spec.per_domain_counts) {
    if (n < spec.num_classes) throw ConfigError("generate_shifted_clusters: every count must be >= C");
  }
  if (!(spec.shift_scale >= 0.0)) throw ConfigError("generate_shifted_clusters: shift_scale must be >= 0");
  if (!(spec.difficulty_skew >= 1.0)) throw ConfigError("generate_shifted_clusters: difficulty_skew must be >= 1");

  const int d = spec.input_dim;
  const int c_count = spec.num_classes;

  std::vector<std::vector<double>> base(c_count, std::vector<double>(d, 0.0));
  for (int c = 0; c < c_count; ++c) {
    if (d >= 2) {
      const double angle = 2.0 * std::numbers::pi * c / c_count;
      base[c][0] = kClusterRadius * std::cos(angle);
      base[c][1] = kClusterRadius * std::sin(angle);
    } else {
      base[c][0] = kClusterRadius * (c - 0.5 * (c_count - 1));
    }
  }

  DomainDataset data;
  data.num_classes = c_count;
  data.input_dim = d;
  data.domains.resize(spec.num_domains);

  for (int i = 0; i < spec.num_domains; ++i) {
    CounterRng rng(spec.seed, 0x1000 + static_cast<std::uint64_t>(i));
    const double shift = i * spec.shift_scale;
    const double rot = shift * kShiftRotation;
    const double cr = std::cos(rot);
    const double sr = std::sin(rot);
    const double move = shift * kShiftTranslation;
    // Noise variance grows geometrically with the domain index.
    const double sigma = kBaseNoise * std::sqrt(std::pow(spec.difficulty_skew, i));

    auto& out = data.domains[i];
    out.reserve(spec.per_domain_counts[i]);
    for (int j = 0; j < spec.per_domain_counts[i]; ++j) {
      Sample s;
      s.label = j % c_count;
      s.domain = i;
      s.features = base[s.label];
      if (d >= 2) {
        const double x0 = s.features[0];
        const double x1 = s.features[1];
        s.features[0] = cr * x0 - sr * x1 + move * std::numbers::sqrt2 / 2.0;
        s.features[1] = sr * x0 + cr * x1 + move * std::numbers::sqrt2 / 2.0;
      } else {
        s.features[0] += move;
      }
      for (double& f : s.features) f += sigma * rng.normal();
      out.push_back(std::move(s));
    }
    rng.shuffle(std::span<Sample>(out));
  }
  return data;
}

// ---------------------------------------------------------------------------
// QuadraticDomains

QuadraticDomains::QuadraticDomains(std::vector<Domain> domains, std::vector<double> weights)
    : domains_(std::move(domains)), weights_(std::move(weights)) {
  if (domains_.empty()) throw ConfigError("QuadraticDomains: no domains");
  dim_ = domains_.front().center.size();
  if (dim_ == 0) throw ConfigError("QuadraticDomains: zero-dimensional parameters");
  for (const auto& dom : domains_) {
    if (dom.center.size() != dim_ || dom.curvature.size() != dim_ * dim_) {
      throw DimensionError("QuadraticDomains: inconsistent dimensions");
    }
    for (std::size_t r = 0; r < dim_; ++r) {
      for (std::size_t c = 0; c < r; ++c) {
        if (dom.curvature[r * dim_ + c] != dom.curvature[c * dim_ + r]) {
          throw ConfigError("QuadraticDomains: curvature is not symmetric");
        }
      }
    }
    // Cholesky succeeds iff the symmetric matrix is positive definite.
    std::vector<double> l(dim_ * dim_, 0.0);
    for (std::size_t j = 0; j < dim_; ++j) {
      double diag = dom.curvature[j * dim_ + j];
      for (std::size_t p = 0; p < j; ++p) diag -= l[j * dim_ + p] * l[j * dim_ + p];
      if (!(diag > 0.0)) throw ConfigError("QuadraticDomains: curvature is not positive definite");
      l[j * dim_ + j] = std::sqrt(diag);
      for (std::size_t r = j + 1; r < dim_; ++r) {
        double v = dom.curvature[r * dim_ + j];
        for (std::size_t p = 0; p < j; ++p) v -= l[r * dim_ + p] * l[j * dim_ + p];
        l[r * dim_ + j] = v / l[j * dim_ + j];
      }
    }
  }
  if (weights_.empty()) {
    weights_.assign(domains_.size(), 1.0 / static_cast<double>(domains_.size()));
  }
  if (weights_.size() != domains_.size()) throw ConfigError("QuadraticDomains: one weight per domain");
  double sum = 0.0;
  for (double a : weights_) {
    if (!(a >= 0.0)) throw ConfigError("QuadraticDomains: negative weight");
    sum += a;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("QuadraticDomains: weights must sum to 1");
}

QuadraticDomains::Domain QuadraticDomains::diagonal(ParamVector center, std::span<const double> diag,
                                                    double offset) {
  const std::size_t k = center.size();
  if (diag.size() != k) throw DimensionError("QuadraticDomains::diagonal: size mismatch");
  Domain dom{std::move(center), std::vector<double>(k * k, 0.0), offset};
  for (std::size_t i = 0; i < k; ++i) dom.curvature[i * k + i] = diag[i];
  return dom;
}

DomainLossReport QuadraticDomains::eval(const ParamVector& w, Batch) const {
  if (w.size() != dim_) throw DimensionError("QuadraticDomains::eval: wrong parameter length");
  DomainLossReport r;
  r.total = 0.0;
  for (std::size_t i = 0; i < domains_.size(); ++i) {
    const auto& dom = domains_[i];
    ParamVector diff = axpy(-1.0, dom.center, w);
    ParamVector grad(dim_);
    for (std::size_t row = 0; row < dim_; ++row) {
      double acc = 0.0;
      for (std::size_t col = 0; col < dim_; ++col) acc += dom.curvature[row * dim_ + col] * diff[col];
      grad[row] = acc;
    }
    const double loss = 0.5 * dot(diff, grad) + dom.offset;
    r.present_domains.push_back(static_cast<int>(i));
    r.counts.push_back(1);
    r.losses.push_back(loss);
    r.weights.push_back(weights_[i]);
    r.grads.push_back(std::move(grad));
    r.total += weights_[i] * loss;
  }
  return r;
}

DomainLossReport eval_quadratic(const QuadraticDomains& q, const ParamVector& w) { return q.eval(w); }

// ---------------------------------------------------------------------------
// SoftmaxMLP

SoftmaxMLP::SoftmaxMLP(int input_dim, int hidden, int classes)
    : input_dim_(input_dim), hidden_(hidden), classes_(classes) {
  if (input_dim < 1 || hidden < 1 || classes < 2) {
    throw ConfigError("SoftmaxMLP: need input_dim >= 1, hidden >= 1, classes >= 2");
  }
}

std::size_t SoftmaxMLP::param_dim() const {
  return static_cast<std::size_t>((input_dim_ + 1) * hidden_ + (hidden_ + 1) * classes_);
}

void SoftmaxMLP::check(const ParamVector& w) const {
  if (w.size() != param_dim()) {
    throw DimensionError("SoftmaxMLP: expected " + std::to_string(param_dim()) + " parameters, got " +
                         std::to_string(w.size()));
  }
}

namespace {

// Forward pass for one sample; fills hidden activations and logits.
void forward(std::span<const double> w, int d, int h, int c, std::span<const double> x,
             std::vector<double>& act, std::vector<double>& logits) {
  const std::size_t b1 = static_cast<std::size_t>(h * d);
  const std::size_t w2 = b1 + h;
  const std::size_t b2 = w2 + static_cast<std::size_t>(c * h);
  act.resize(h);
  logits.resize(c);
  for (int j = 0; j < h; ++j) {
    double z = w[b1 + j];
    for (int p = 0; p < d; ++p) z += w[j * d + p] * x[p];
    act[j] = std::tanh(z);
  }
  for (int k = 0; k < c; ++k) {
    double z = w[b2 + k];
    for (int j = 0; j < h; ++j) z += w[w2 + k * h + j] * act[j];
    logits[k] = z;
  }
}

// Stable log-sum-exp; probs receives the softmax.
double log_softmax_normalizer(std::span<const double> logits, std::vector<double>& probs) {
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  probs.resize(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) {
    probs[k] = std::exp(logits[k] - top);
    sum += probs[k];
  }
  for (double& p : probs) p /= sum;
  return top + std::log(sum);
}

}  // namespace

std::vector<double> SoftmaxMLP::logits(const ParamVector& w, std::span<const double> x) const {
  check(w);
  if (static_cast<int>(x.size()) != input_dim_) throw DimensionError("SoftmaxMLP: feature length mismatch");
  std::vector<double> act, out;
  forward(w.span(), input_dim_, hidden_, classes_, x, act, out);
  return out;
}

int SoftmaxMLP::predict(const ParamVector& w, std::span<const double> x) const {
  const auto z = logits(w, x);
  return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
}

double SoftmaxMLP::mean_loss(const ParamVector& w, Batch samples) const {
  check(w);
  if (samples.empty()) throw ConfigError("SoftmaxMLP::mean_loss: no samples");
  std::vector<double> act, z, probs;
  double acc = 0.0;
  for (const auto& s : samples) {
    forward(w.span(), input_dim_, hidden_, classes_, s.features, act, z);
    acc += log_softmax_normalizer(z, probs) - z[s.label];
  }
  return acc / static_cast<double>(samples.size());
}

ParamVector SoftmaxMLP::initial_params(CounterRng& rng) const {
  ParamVector w(param_dim());
  const std::size_t b1 = static_cast<std::size_t>(hidden_ * input_dim_);
  const std::size_t w2 = b1 + hidden_;
  const std::size_t b2 = w2 + static_cast<std::size_t>(classes_ * hidden_);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(input_dim_));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden_));
  for (std::size_t i = 0; i < b1; ++i) w[i] = rng.uniform(-s1, s1);
  for (std::size_t i = w2; i < b2; ++i) w[i] = rng.uniform(-s2, s2);
  return w;
}

DomainLossReport SoftmaxMLP::eval(const ParamVector& w, Batch batch) const {
  check(w);
  const int d = input_dim_;
  const int h = hidden_;
  const int c = classes_;
  const std::size_t b1 = static_cast<std::size_t>(h * d);
  const std::size_t w2 = b1 + h;
  const std::size_t b2 = w2 + static_cast<std::size_t>(c * h);

  std::vector<int> ids;
  for (const auto& s : batch) {
    if (s.domain < 0) throw ConfigError("SoftmaxMLP::eval: negative domain id");
    if (static_cast<int>(s.features.size()) != d) throw DimensionError("SoftmaxMLP::eval: feature length mismatch");
    if (s.label < 0 || s.label >= c) throw ConfigError("SoftmaxMLP::eval: label out of range");
    ids.push_back(s.domain);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  DomainLossReport r;
  r.present_domains = ids;
  r.counts.assign(ids.size(), 0);
  r.losses.assign(ids.size(), 0.0);
  r.grads.assign(ids.size(), ParamVector(param_dim()));

  std::vector<double> act, z, probs, dz2(c), dact(h);
  for (const auto& s : batch) {
    const auto slot = static_cast<std::size_t>(std::lower_bound(ids.begin(), ids.end(), s.domain) - ids.begin());
    forward(w.span(), d, h, c, s.features, act, z);
    r.losses[slot] += log_softmax_normalizer(z, probs) - z[s.label];
    r.counts[slot] += 1;

    auto& g = r.grads[slot];
    for (int k = 0; k < c; ++k) dz2[k] = probs[k] - (k == s.label ? 1.0 : 0.0);
    std::fill(dact.begin(), dact.end(), 0.0);
    for (int k = 0; k < c; ++k) {
      g[b2 + k] += dz2[k];
      for (int j = 0; j < h; ++j) {
        g[w2 + k * h + j] += dz2[k] * act[j];
        dact[j] += w[w2 + k * h + j] * dz2[k];
      }
    }
    for (int j = 0; j < h; ++j) {
      const double dz1 = dact[j] * (1.0 - act[j] * act[j]);
      g[b1 + j] += dz1;
      for (int p = 0; p < d; ++p) g[j * d + p] += dz1 * s.features[p];
    }
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const double inv = 1.0 / static_cast<double>(r.counts[i]);
    r.losses[i] *= inv;
    for (double& v : r.grads[i]) v *= inv;
  }
  if (!ids.empty()) finalize_weights(r);
  return r;
}

DomainLossReport eval_mlp(const SoftmaxMLP& m, const ParamVector& w, Batch batch) {
  if (batch.empty()) throw ConfigError("eval_mlp: empty batch");
  return m.eval(w, batch);
}

}  // namespace disam
