// Copyright (c) 2026, DISAM contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>

namespace disam::tools {

/// Runs the quick invariant/oracle checks, one PASS/FAIL line each.
/// Returns the number of failed checks.
int run_check_suite(std::ostream& out);

}  // namespace disam::tools
