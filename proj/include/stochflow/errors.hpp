#pragma once

#include <stdexcept>
#include <string>

namespace stochflow {

/// Input violates a documented resource cap (dimension, state budget, ...).
struct CapacityError : std::runtime_error {
  explicit CapacityError(const std::string& what) : std::runtime_error(what) {}
};

/// Input file/JSON is malformed or semantically invalid.
struct SpecError : std::runtime_error {
  explicit SpecError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace stochflow
