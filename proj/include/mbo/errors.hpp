#pragma once

#include <stdexcept>
#include <string>

namespace mbo {

// Mismatched grid specs between operands.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A set (plus kernel support) would wrap around the periodic domain.
struct ContainmentError : std::domain_error {
  using std::domain_error::domain_error;
};

struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TopologyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mbo
