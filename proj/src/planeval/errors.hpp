#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace planeval {

// Domain error codes. The names returned by to_string() are part of the
// machine-readable surface (CLI stderr lines, HTTP error bodies, C API).
enum class ErrorCode {
  InvalidArgument,
  PointAtInfinity,
  InsufficientPoints,
  DegenerateConfiguration,
  EmptyRegion,
  EmptyInput,
  NonPositiveGroundTruth,
  InsufficientData,
  ConstantInput,
  EmptyGroup,
  AllCellsInvalid,
  BehindCamera,
  MalformedHeader,
  TruncatedData,
  UnsupportedChannels,
  IoError,
  ParseError,
  NoFit,
  NotFound,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& detail) {
  throw Error(code, detail);
}

}  // namespace planeval
