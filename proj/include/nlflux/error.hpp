#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace nlflux {

/// Invalid grid, kernel, or experiment parameters.
class ConfigurationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operands that do not fit together (support or pair-list mismatch,
/// non-finite data, out-of-range scalars).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input for which a requested quantity is undefined, e.g. normalizing by
/// the norm of a zero flux.
class DegenerateInputError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Iterative procedure failed in a way that cannot be reported as a plain
/// non-converged result.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A-posteriori bound check failed: two certified values that must agree
/// (or be ordered) do not.
class CertificateError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Shortest round-trip decimal form used in diagnostics and CSV output.
inline std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace nlflux
