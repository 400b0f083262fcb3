#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace treeid {

enum class ErrorCode {
  InvalidArgument,
  UnknownNode,
  SchemaError,
  ParseError,
  NotConnected,
  HasCycle,
  EmptyRemainder,
  OverlappingSets,
  Infeasible,
  NonFinite,
  UnstableSystem,
  SingularResolvent,
  TooFewSegments,
  Degenerate,
  SingularBlock,
  AssumptionViolated,
  Ambiguous,
  NodeSetMismatch,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Base class of every exception raised by the library. The code is stable
/// and is what callers (and the CLI exit-code mapping) should switch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

  /// True for errors caused by malformed input files or settings rather than
  /// by a processing stage.
  bool is_config_error() const noexcept;

 private:
  ErrorCode code_;
};

class NotConnectedError : public Error {
 public:
  explicit NotConnectedError(std::vector<std::vector<std::string>> components);
  const std::vector<std::vector<std::string>>& components() const noexcept { return components_; }

 private:
  std::vector<std::vector<std::string>> components_;
};

class HasCycleError : public Error {
 public:
  explicit HasCycleError(std::vector<std::string> cycle);
  /// Witness cycle as a closed walk without the repeated first node.
  const std::vector<std::string>& cycle() const noexcept { return cycle_; }

 private:
  std::vector<std::string> cycle_;
};

class ParseError : public Error {
 public:
  ParseError(std::string source, std::size_t line, const std::string& detail);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class AmbiguousError : public Error {
 public:
  AmbiguousError(std::string leaf, const std::string& detail);
  const std::string& leaf() const noexcept { return leaf_; }

 private:
  std::string leaf_;
};

}  // namespace treeid
