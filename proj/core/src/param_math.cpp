// Copyright (c) 2026, DISAM contributors
// SPDX-License-Identifier: Apache-2.0

#include "disam/param_math.hpp"

#include <cmath>

namespace disam {

bool ParamVector::all_finite() const noexcept {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void require_same_length(const ParamVector& a, const ParamVector& b, const char* what) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(what) + ": length mismatch (" + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()) + ")");
  }
}

ParamVector axpy(double a, const ParamVector& x, const ParamVector& y) {
  require_same_length(x, y, "axpy");
  ParamVector out(y);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x[i] + y[i];
  return out;
}

void axpy_inplace(double a, const ParamVector& x, ParamVector& y) {
  require_same_length(x, y, "axpy_inplace");
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a * x[i] + y[i];
}

ParamVector scaled(double a, const ParamVector& x) {
  ParamVector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i];
  return out;
}

double dot(const ParamVector& x, const ParamVector& y) {
  require_same_length(x, y, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc;
}

double l2_norm(const ParamVector& x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc);
}

std::optional<ParamVector> normalize_to_radius(const ParamVector& x, double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("normalize_to_radius: rho must be > 0");
  const double norm = l2_norm(x);
  if (!(norm > kDegenerateNorm)) return std::nullopt;
  return scaled(rho / norm, x);
}

}  // namespace disam
