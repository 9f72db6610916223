#include "nemesys/common/error.hpp"

namespace nemesys {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kMalformedConfig: return "MalformedConfig";
    case ErrorCode::kUnroutedEventKind: return "UnroutedEventKind";
    case ErrorCode::kUnknownProfileKind: return "UnknownProfileKind";
    case ErrorCode::kNonMonotoneArrivals: return "NonMonotoneArrivals";
    case ErrorCode::kUnknownUE: return "UnknownUE";
    case ErrorCode::kWindowOutOfHorizon: return "WindowOutOfHorizon";
    case ErrorCode::kPeriodTooShort: return "PeriodTooShort";
    case ErrorCode::kUnorderedStream: return "UnorderedStream";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kSeriesTooShort: return "SeriesTooShort";
    case ErrorCode::kNonPositiveObservation: return "NonPositiveObservation";
    case ErrorCode::kInsufficientSamples: return "InsufficientSamples";
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kUnstableNetwork: return "UnstableNetwork";
    case ErrorCode::kDivergedTraining: return "DivergedTraining";
    case ErrorCode::kMixedScopes: return "MixedScopes";
    case ErrorCode::kSchemaViolation: return "SchemaViolation";
    case ErrorCode::kStorageFailure: return "StorageFailure";
    case ErrorCode::kUnorderedFeed: return "UnorderedFeed";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kBadK: return "BadK";
    case ErrorCode::kMalformedFilter: return "MalformedFilter";
    case ErrorCode::kMalformedTable: return "MalformedTable";
    case ErrorCode::kBadWeights: return "BadWeights";
    case ErrorCode::kNodeMismatch: return "NodeMismatch";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

bool is_validation_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNoConvergence:
    case ErrorCode::kUnstableNetwork:
    case ErrorCode::kDivergedTraining:
    case ErrorCode::kStorageFailure:
    case ErrorCode::kIo:
      return false;
    default:
      return true;
  }
}

}  // namespace nemesys
