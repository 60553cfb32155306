#pragma once

#include <stdexcept>
#include <string>

namespace handsoff {

enum class ErrorCode {
  kDimensionMismatch,
  kNonpositiveWeight,
  kNonpositiveHorizon,
  kInvalidGrid,
  kNonFinite,
  kParseError,
  kLengthMismatch,
  kMemoryGuard,
  kRankDeficient,
  kExhaustiveBoundExceeded,
  kInfeasible,
  kIoError,
};

const char* to_string(ErrorCode code);

// Every malformed input is reported through this type; nothing is repaired
// silently. `field()` names the offending field or location when known.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string field = {})
      : std::runtime_error(message), code_(code), field_(std::move(field)) {}

  ErrorCode code() const { return code_; }
  const std::string& field() const { return field_; }

 private:
  ErrorCode code_;
  std::string field_;
};

}  // namespace handsoff
