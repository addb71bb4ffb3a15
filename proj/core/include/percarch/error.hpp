#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace percarch {

enum class ErrorCode {
  kInvalidDimensions,
  kOutOfBounds,
  kPlacementForbidden,
  kEncodingDomain,
  kShape,
  kTimeDomain,
  kCovarianceIntegrity,
  kNumericalSingularity,
  kDegenerateGeometry,
  kConfiguration,
  kParse,
  kValidation,
  kIntegrity,
  kIo,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so that
/// callers (and the CLI exit path) can branch on the category.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace percarch
