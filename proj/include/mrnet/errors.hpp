#pragma once

#include <stdexcept>
#include <string>

namespace mrnet {

/// Violation of an input/file/shape contract. CLI exit code 2.
class ContractError : public std::runtime_error {
 public:
  explicit ContractError(const std::string& what) : std::runtime_error(what) {}
};

/// Shape disagreement between tensors or configs.
class ShapeError : public ContractError {
 public:
  explicit ShapeError(const std::string& what) : ContractError(what) {}
};

/// Non-finite values or other numeric breakdown. CLI exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mrnet
