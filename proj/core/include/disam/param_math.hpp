// Copyright (c) 2026, DISAM contributors
// SPDX-License-Identifier: Apache-2.0
//
// Flat parameter-vector algebra shared by the problems, optimizers and
// diagnostics.

#pragma once

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace disam {

/// Raised when two vectors that must share a length do not.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Gradients with an l2 norm at or below this value are treated as zero
/// when normalizing to a perturbation radius.
inline constexpr double kDegenerateNorm = 1e-12;

/// A dense vector of model parameters w in R^k. The length is fixed at
/// construction; every operation in this header preserves it.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::size_t k, double fill = 0.0) : values_(k, fill) {}
  explicit ParamVector(std::vector<double> values) : values_(std::move(values)) {}
  ParamVector(std::initializer_list<double> values) : values_(values) {}

  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator[](std::size_t i) noexcept { return values_[i]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  std::span<double> span() noexcept { return values_; }
  std::span<const double> span() const noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  auto begin() noexcept { return values_.begin(); }
  auto end() noexcept { return values_.end(); }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  bool operator==(const ParamVector&) const = default;

  /// True when no entry is NaN or infinite.
  bool all_finite() const noexcept;

 private:
  std::vector<double> values_;
};

/// Returns a*x + y. Throws DimensionError if x and y differ in length.
ParamVector axpy(double a, const ParamVector& x, const ParamVector& y);

/// In-place y += a*x.
void axpy_inplace(double a, const ParamVector& x, ParamVector& y);

ParamVector scaled(double a, const ParamVector& x);

double dot(const ParamVector& x, const ParamVector& y);

double l2_norm(const ParamVector& x);

/// rho * x / ||x||_2, or std::nullopt when ||x||_2 <= kDegenerateNorm.
/// Callers treat the empty result as a degenerate gradient and fall back to a
/// zero perturbation.
std::optional<ParamVector> normalize_to_radius(const ParamVector& x, double rho);

/// Throws DimensionError unless a.size() == b.size().
void require_same_length(const ParamVector& a, const ParamVector& b, const char* what);

}  // namespace disam
