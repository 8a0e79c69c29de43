#pragma once

#include <stdexcept>
#include <string>

namespace gwsm {

// Shapes of operands do not agree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A precondition on arguments or call order was violated.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed or unreadable input data (manifests, images, checkpoints, configs).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A computation produced a non-finite value.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gwsm
