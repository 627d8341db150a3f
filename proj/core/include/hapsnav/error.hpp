#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hapsnav {

enum class ErrorCode {
  NearSingular,
  DegenerateGeometry,
  InvalidPropagationTime,
  KeplerNonConvergence,
  StaleEphemeris,
  BelowMask,
  ElevationTooLow,
  NoSatelliteReference,
  SingularGeometry,
  InvalidCovariance,
  InvalidArgument,
  MalformedHeader,
  MalformedRecord,
  MalformedEpoch,
  NoEphemeris,
  SchemaError,
  TimestampMisaligned,
  ConfigError,
  EmptyInput,
  DivisionByZero,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception type thrown by every hapsnav module. The code is stable and is
/// what the CLI reports in its machine-readable error JSON.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hapsnav
