#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace maxlink {

enum class Errc {
  NotPositiveDefinite,
  DimensionMismatch,
  InvalidTransitionMatrix,
  InvalidSpec,
  SelectorOutOfWindow,
  PathExplosion,
  MalformedTable,
  AgeOutOfRange,
  TiltedProbabilityOutOfRange,
  GuaranteeZeroInCall,
  NonFinitePayoff,
  ParseError,
};

inline std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::NotPositiveDefinite: return "NotPositiveDefinite";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::InvalidTransitionMatrix: return "InvalidTransitionMatrix";
    case Errc::InvalidSpec: return "InvalidSpec";
    case Errc::SelectorOutOfWindow: return "SelectorOutOfWindow";
    case Errc::PathExplosion: return "PathExplosion";
    case Errc::MalformedTable: return "MalformedTable";
    case Errc::AgeOutOfRange: return "AgeOutOfRange";
    case Errc::TiltedProbabilityOutOfRange: return "TiltedProbabilityOutOfRange";
    case Errc::GuaranteeZeroInCall: return "GuaranteeZeroInCall";
    case Errc::NonFinitePayoff: return "NonFinitePayoff";
    case Errc::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// True for errors that indicate bad input rather than a runtime failure.
inline bool is_validation_error(Errc code) {
  switch (code) {
    case Errc::NotPositiveDefinite:
    case Errc::DimensionMismatch:
    case Errc::InvalidTransitionMatrix:
    case Errc::InvalidSpec:
    case Errc::MalformedTable:
    case Errc::ParseError:
      return true;
    default:
      return false;
  }
}

}  // namespace maxlink
