#pragma once

#include <stdexcept>
#include <string>

namespace mlpart {

/// Malformed input files or values that violate a type invariant on load.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

/// A request that is well-formed but cannot be satisfied (e.g. K larger than
/// the number of admissible segmentations, contradictory constraints).
class InfeasibleError : public std::runtime_error {
 public:
  explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mlpart
