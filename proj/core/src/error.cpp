#include "treeid/error.hpp"

#include <sstream>

namespace treeid {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NotConnected: return "NotConnected";
    case ErrorCode::HasCycle: return "HasCycle";
    case ErrorCode::EmptyRemainder: return "EmptyRemainder";
    case ErrorCode::OverlappingSets: return "OverlappingSets";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::UnstableSystem: return "UnstableSystem";
    case ErrorCode::SingularResolvent: return "SingularResolvent";
    case ErrorCode::TooFewSegments: return "TooFewSegments";
    case ErrorCode::Degenerate: return "Degenerate";
    case ErrorCode::SingularBlock: return "SingularBlock";
    case ErrorCode::AssumptionViolated: return "AssumptionViolated";
    case ErrorCode::Ambiguous: return "Ambiguous";
    case ErrorCode::NodeSetMismatch: return "NodeSetMismatch";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

bool Error::is_config_error() const noexcept {
  switch (code_) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::SchemaError:
    case ErrorCode::ParseError:
    case ErrorCode::IoError:
      return true;
    default:
      return false;
  }
}

namespace {

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::string describe_components(const std::vector<std::vector<std::string>>& comps) {
  std::ostringstream os;
  os << comps.size() << " components:";
  for (const auto& c : comps) os << " {" << join(c, ",") << "}";
  return os.str();
}

}  // namespace

NotConnectedError::NotConnectedError(std::vector<std::vector<std::string>> components)
    : Error(ErrorCode::NotConnected, describe_components(components)),
      components_(std::move(components)) {}

HasCycleError::HasCycleError(std::vector<std::string> cycle)
    : Error(ErrorCode::HasCycle, "cycle " + join(cycle, "-")), cycle_(std::move(cycle)) {}

ParseError::ParseError(std::string source, std::size_t line, const std::string& detail)
    : Error(ErrorCode::ParseError, source + ":" + std::to_string(line) + ": " + detail),
      line_(line) {}

AmbiguousError::AmbiguousError(std::string leaf, const std::string& detail)
    : Error(ErrorCode::Ambiguous, "leaf " + leaf + ": " + detail), leaf_(std::move(leaf)) {}

}  // namespace treeid
