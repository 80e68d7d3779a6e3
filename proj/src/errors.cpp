#include "segwelfare/errors.hpp"

namespace segwelfare {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::OutOfSupport: return "OutOfSupport";
    case ErrorCode::NoInteriorRoot: return "NoInteriorRoot";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::PartialInclusionViolated: return "PartialInclusionViolated";
    case ErrorCode::DegenerateCurvature: return "DegenerateCurvature";
    case ErrorCode::SignConditionViolated: return "SignConditionViolated";
    case ErrorCode::SimplexViolation: return "SimplexViolation";
    case ErrorCode::ZeroInformationGap: return "ZeroInformationGap";
    case ErrorCode::NotARefinement: return "NotARefinement";
    case ErrorCode::CorollaryViolation: return "CorollaryViolation";
    case ErrorCode::UndefinedDirection: return "UndefinedDirection";
    case ErrorCode::BoundaryTooClose: return "BoundaryTooClose";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::WrongDimension: return "WrongDimension";
    case ErrorCode::ConfigParse: return "ConfigParse";
  }
  return "Unknown";
}

}  // namespace segwelfare
