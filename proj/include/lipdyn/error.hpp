#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lipdyn {

enum class ErrorCode {
  MalformedRecord,
  IoFailure,
  DegenerateBox,
  DegenerateGeometry,
  EmptyMask,
  TooFewPixels,
  NotNormalized,
  WindowTooShort,
  UnknownPhoneme,
  DimensionMismatch,
  VersionMismatch,
  ChecksumMismatch,
  NoPositivePairs,
  NoNegativePairs,
  NonFiniteLoss,
  TooFewWindows,
  EmptySet,
  EmptyInput,
  InsufficientData,
  InvalidConfig,
};

std::string_view to_string(ErrorCode code);

/// Process exit status for an error: 1 usage, 2 data, 3 numeric.
int exit_status(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> line = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

  /// Single-line `key=value` diagnostic.
  std::string diagnostic() const;

 private:
  ErrorCode code_;
  std::optional<std::size_t> line_;
};

}  // namespace lipdyn
