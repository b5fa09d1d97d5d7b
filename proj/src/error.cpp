#include "pkg/error.hpp"

namespace pkg {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io: return "IoError";
    case ErrorCode::Parse: return "ParseError";
    case ErrorCode::DuplicateAdmission: return "DuplicateAdmission";
    case ErrorCode::InvalidWindow: return "InvalidWindow";
    case ErrorCode::SampleTooLarge: return "SampleTooLarge";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::Shape: return "ShapeError";
    case ErrorCode::Numeric: return "NumericError";
    case ErrorCode::InvalidNode: return "InvalidNode";
    case ErrorCode::DegenerateSplit: return "DegenerateSplit";
    case ErrorCode::EmptyEvaluation: return "EmptyEvaluation";
    case ErrorCode::InvalidConditionList: return "InvalidConditionList";
    case ErrorCode::UndefinedDelta: return "UndefinedDelta";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::Write: return "WriteError";
    case ErrorCode::OracleTooLarge: return "OracleTooLarge";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "UnknownError";
}

}  // namespace pkg
