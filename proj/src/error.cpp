#include "lipdyn/error.hpp"

#include <sstream>

namespace lipdyn {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::DegenerateBox: return "DegenerateBox";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::TooFewPixels: return "TooFewPixels";
    case ErrorCode::NotNormalized: return "NotNormalized";
    case ErrorCode::WindowTooShort: return "WindowTooShort";
    case ErrorCode::UnknownPhoneme: return "UnknownPhoneme";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::NoPositivePairs: return "NoPositivePairs";
    case ErrorCode::NoNegativePairs: return "NoNegativePairs";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::TooFewWindows: return "TooFewWindows";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

int exit_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig:
      return 1;
    case ErrorCode::NonFiniteLoss:
      return 3;
    default:
      return 2;
  }
}

Error::Error(ErrorCode code, const std::string& message,
             std::optional<std::size_t> line)
    : std::runtime_error(message), code_(code), line_(line) {}

std::string Error::diagnostic() const {
  std::ostringstream os;
  os << "error code=" << to_string(code_);
  if (line_) os << " line=" << *line_;
  std::string msg = what();
  for (char& c : msg) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  os << " message=\"" << msg << '"';
  return os.str();
}

}  // namespace lipdyn
