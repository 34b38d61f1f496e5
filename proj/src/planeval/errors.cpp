#include "planeval/errors.hpp"

namespace planeval {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::PointAtInfinity: return "PointAtInfinity";
    case ErrorCode::InsufficientPoints: return "InsufficientPoints";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::EmptyRegion: return "EmptyRegion";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NonPositiveGroundTruth: return "NonPositiveGroundTruth";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::ConstantInput: return "ConstantInput";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::AllCellsInvalid: return "AllCellsInvalid";
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::TruncatedData: return "TruncatedData";
    case ErrorCode::UnsupportedChannels: return "UnsupportedChannels";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NoFit: return "NoFit";
    case ErrorCode::NotFound: return "NotFound";
  }
  return "Unknown";
}

}  // namespace planeval
