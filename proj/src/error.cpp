#include "meyerlab/error.hpp"

namespace meyerlab {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SingularBasis: return "SingularBasis";
    case ErrorCode::RegionTooLarge: return "RegionTooLarge";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyPatch: return "EmptyPatch";
    case ErrorCode::RadiusExceedsValidity: return "RadiusExceedsValidity";
    case ErrorCode::ExtentTooSmall: return "ExtentTooSmall";
    case ErrorCode::NotAReturnTime: return "NotAReturnTime";
    case ErrorCode::WindowTooSmall: return "WindowTooSmall";
    case ErrorCode::InjectivityViolated: return "InjectivityViolated";
    case ErrorCode::NoHits: return "NoHits";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace meyerlab
