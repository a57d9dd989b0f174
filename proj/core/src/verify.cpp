// Copyright (c) 2026, DISAM contributors
// SPDX-License-Identifier: Apache-2.0

#include "disam/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "disam/rng.hpp"

namespace disam::verify {

ParamVector central_difference(const std::function<double(const ParamVector&)>& f, const ParamVector& w, double h) {
  ParamVector grad(w.size());
  ParamVector probe = w;
  for (std::size_t i = 0; i < w.size(); ++i) {
    probe[i] = w[i] + h;
    const double up = f(probe);
    probe[i] = w[i] - h;
    const double down = f(probe);
    probe[i] = w[i];
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

double max_relative_error(const ParamVector& analytic, const ParamVector& numeric) {
  require_same_length(analytic, numeric, "max_relative_error");
  double scale = 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]));
  }
  if (scale == 0.0) return worst;
  return worst / scale;
}

double moment_variance(std::span<const double> losses) {
  if (losses.empty()) return 0.0;
  double mean = 0.0;
  for (double l : losses) mean += l;
  mean /= static_cast<double>(losses.size());
  double acc = 0.0;
  for (double l : losses) acc += (l - mean) * (l - mean);
  return acc / static_cast<double>(losses.size());
}

double monte_carlo_sharpness(const std::function<double(const ParamVector&)>& f, const ParamVector& w, double rho,
                             int directions, std::uint64_t seed) {
  CounterRng rng(seed, 0x5EED);
  const double base = f(w);
  double best = -std::numeric_limits<double>::infinity();
  ParamVector u(w.size());
  for (int k = 0; k < directions; ++k) {
    for (auto& v : u) v = rng.normal();
    const double n = l2_norm(u);
    if (n == 0.0) continue;
    best = std::max(best, f(axpy(rho / n, u, w)) - base);
  }
  return best;
}

}  // namespace disam::verify
