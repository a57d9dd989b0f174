// Copyright (c) 2026, DISAM contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace disam {

/// Shortest decimal form that parses back to the same double
/// ("nan", "inf", "-inf" for non-finite values).
std::string format_double(double v);

/// Inverse of format_double. Throws std::invalid_argument on malformed input.
double parse_double(std::string_view text);

/// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace disam
