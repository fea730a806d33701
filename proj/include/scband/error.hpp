#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace scband {

enum class ErrorCode {
  Domain,
  DesignSingular,
  NotPSD,
  DegenerateScale,
  AllDegenerate,
  NoFeasibleKnots,
  EmptySupport,
  Parse,
  EmptyDataset,
  Config,
  InvalidArgument,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Domain: return "DomainError";
    case ErrorCode::DesignSingular: return "DesignSingular";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::DegenerateScale: return "DegenerateScale";
    case ErrorCode::AllDegenerate: return "AllDegenerate";
    case ErrorCode::NoFeasibleKnots: return "NoFeasibleKnots";
    case ErrorCode::EmptySupport: return "EmptySupport";
    case ErrorCode::Parse: return "ParseError";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::Config: return "ConfigError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI's error JSON) can dispatch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace scband
