#pragma once

#include <stdexcept>
#include <string>

namespace htstep {

/// Malformed arguments: bad mode index, mismatched dims, out-of-range ranks.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A dense tensor would exceed the configured element budget.
class BudgetError : public std::length_error {
public:
    using std::length_error::length_error;
};

/// Non-finite values, degenerate spectra, ill-conditioned factors, solver timeouts.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid run configuration (CLI / config file level).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace htstep
