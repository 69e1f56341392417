// Error taxonomy.  Everything recoverable by the sweep harness derives from
// std::runtime_error and carries a small code enum so callers can branch
// without string matching.
#pragma once

#include <stdexcept>
#include <string>

namespace coxsg {

class FitError : public std::runtime_error {
 public:
  enum class Code { InsufficientEvents };
  FitError(Code code, const std::string& what)
      : std::runtime_error(what), code(code) {}
  Code code;
};

class MetricError : public std::runtime_error {
 public:
  enum class Code { NoComparablePairs, GroupTooSmall };
  MetricError(Code code, const std::string& what)
      : std::runtime_error(what), code(code) {}
  Code code;
};

class MethodError : public std::runtime_error {
 public:
  enum class Code { TooFewPoints, NoValidLeaf, NoValidRegion, NoValidCoreGroup };
  MethodError(Code code, const std::string& what)
      : std::runtime_error(what), code(code) {}
  Code code;
};

class IngestError : public std::runtime_error {
 public:
  enum class Code { MissingColumn, BadCell, Empty };
  IngestError(Code code, const std::string& what)
      : std::runtime_error(what), code(code) {}
  Code code;
};

class SelectError : public std::runtime_error {
 public:
  enum class Code { NoEligibleSubgroup };
  SelectError(Code code, const std::string& what)
      : std::runtime_error(what), code(code) {}
  Code code;
};

}  // namespace coxsg
