// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cscal/grad_check.hpp"

namespace cscal {

struct OpGradReport {
  std::string op;
  double max_rel_error = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

/// Finite-difference check of every primitive on random inputs (threshold
/// 1e-5) plus the full objective on a small two-network model (threshold
/// 1e-4). The reversal layer is checked against its defining rule: the tape
/// gradient must equal -lambda times the finite-difference gradient of the
/// identity forward. For the full objective, the probes hold the pairing
/// fixed and flip the sign of the reversed terms on the extractor side,
/// since the reversal makes the recorded gradient field non-conservative.
std::vector<OpGradReport> run_gradient_suite(std::uint64_t seed);

bool gradient_suite_passes(const std::vector<OpGradReport>& reports);

}  // namespace cscal
