#pragma once

#include <stdexcept>
#include <string>

namespace noisyfp {

/// Invalid arguments, malformed files, bad flag combinations.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A ground-truth-dependent quantity was requested on a dataset without labels.
class MissingGroundTruth : public std::logic_error {
 public:
  MissingGroundTruth() : std::logic_error("dataset has no ground-truth labels") {}
};

/// The m^p enumeration guard of the exact oracles tripped.
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A protocol-internal invariant broke. Always a bug, never a user error.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace noisyfp
