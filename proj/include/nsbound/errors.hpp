#pragma once

#include <stdexcept>

namespace nsbound {

/// Invalid problem configuration (CLI exit code 2).
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Tame constants missing with computation disabled (CLI exit code 3).
struct ConstantsUnavailable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Time integration or quadrature could not proceed (CLI exit code 4).
struct IntegratorFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace nsbound
