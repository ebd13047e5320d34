// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace cscal {

/// Base error type. The CLI maps the three concrete categories onto
/// distinct exit codes (config=2, data=3, numeric=4).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or incomplete configuration (unknown key, bad value, bad flag).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Dataset ingestion or generation failure (missing column, bad row, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure at runtime (non-finite loss, SVD non-convergence).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Violated API precondition (shape mismatch, out-of-range index, tape misuse).
class ContractError : public Error {
 public:
  using Error::Error;
};

}  // namespace cscal
