#include "hapsnav/error.hpp"

namespace hapsnav {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NearSingular: return "NearSingular";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::InvalidPropagationTime: return "InvalidPropagationTime";
    case ErrorCode::KeplerNonConvergence: return "KeplerNonConvergence";
    case ErrorCode::StaleEphemeris: return "StaleEphemeris";
    case ErrorCode::BelowMask: return "BelowMask";
    case ErrorCode::ElevationTooLow: return "ElevationTooLow";
    case ErrorCode::NoSatelliteReference: return "NoSatelliteReference";
    case ErrorCode::SingularGeometry: return "SingularGeometry";
    case ErrorCode::InvalidCovariance: return "InvalidCovariance";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::MalformedEpoch: return "MalformedEpoch";
    case ErrorCode::NoEphemeris: return "NoEphemeris";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::TimestampMisaligned: return "TimestampMisaligned";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DivisionByZero: return "DivisionByZero";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace hapsnav
