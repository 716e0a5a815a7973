#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace meyerlab {

enum class ErrorCode {
  SingularBasis,
  RegionTooLarge,
  DimensionMismatch,
  EmptyPatch,
  RadiusExceedsValidity,
  ExtentTooSmall,
  NotAReturnTime,
  WindowTooSmall,
  InjectivityViolated,
  NoHits,
  InvalidArgument,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (notably the CLI) can map it onto exit statuses and messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace meyerlab
