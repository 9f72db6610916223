#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nemesys {

enum class ErrorCode {
  kInvalidArgument,
  kMalformedConfig,
  kUnroutedEventKind,
  kUnknownProfileKind,
  kNonMonotoneArrivals,
  kUnknownUE,
  kWindowOutOfHorizon,
  kPeriodTooShort,
  kUnorderedStream,
  kInsufficientData,
  kSeriesTooShort,
  kNonPositiveObservation,
  kInsufficientSamples,
  kNoConvergence,
  kUnstableNetwork,
  kDivergedTraining,
  kMixedScopes,
  kSchemaViolation,
  kStorageFailure,
  kUnorderedFeed,
  kDimensionMismatch,
  kBadK,
  kMalformedFilter,
  kMalformedTable,
  kBadWeights,
  kNodeMismatch,
  kIo,
};

std::string_view to_string(ErrorCode code);

// Validation errors are caller mistakes (bad input, bad config); everything
// else is a runtime failure. The CLI maps these to exit codes 1 and 2.
bool is_validation_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace nemesys
