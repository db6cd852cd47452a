// Copyright 2026 The specrec Authors
// Licensed under the Apache License, Version 2.0
#pragma once

#include <stdexcept>
#include <string>

namespace specrec {

// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid parameters or configuration (CLI exit code 2).
struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(what) {}
};

// Dataset / IO problems (CLI exit code 3).
struct DataError : Error {
  explicit DataError(const std::string& what) : Error(what) {}
};

// Numerical failures such as non-convergence (CLI exit code 4).
struct NumericError : Error {
  explicit NumericError(const std::string& what) : Error(what) {}
};

}  // namespace specrec
