// Copyright (c) 2026, DISAM contributors
// SPDX-License-Identifier: Apache-2.0
//
// Independent numerical oracles: central finite differences, the moment form
// of the variance, and Monte Carlo sharpness. None of these share code paths
// with the analytic implementations they are used to check.

#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "disam/param_math.hpp"

namespace disam::verify {

/// Central differences of f at w with step h.
ParamVector central_difference(const std::function<double(const ParamVector&)>& f, const ParamVector& w,
                               double h = 1e-5);

/// max_i |a_i - n_i| / max(|a|_inf, |n|_inf): entrywise error relative to the
/// gradient's scale. Tiny entries are not judged against their own magnitude,
/// where finite-difference round-off dominates.
double max_relative_error(const ParamVector& analytic, const ParamVector& numeric);

/// (1/M) sum (L_i - mean)^2.
double moment_variance(std::span<const double> losses);

/// max over `directions` random unit directions u of f(w + rho u) - f(w).
double monte_carlo_sharpness(const std::function<double(const ParamVector&)>& f, const ParamVector& w, double rho,
                             int directions, std::uint64_t seed);

}  // namespace disam::verify
