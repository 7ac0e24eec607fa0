#include "entropywalks/error.hpp"

namespace ew {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptySupport: return "EmptySupport";
    case ErrorCode::ArityMismatch: return "ArityMismatch";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::DuplicateKey: return "DuplicateKey";
    case ErrorCode::NegativeCoordinate: return "NegativeCoordinate";
    case ErrorCode::NonpositiveField: return "NonpositiveField";
    case ErrorCode::ZeroMassCondition: return "ZeroMassCondition";
    case ErrorCode::ArityOutOfRange: return "ArityOutOfRange";
    case ErrorCode::ZeroMassRow: return "ZeroMassRow";
    case ErrorCode::StateSpaceTooLarge: return "StateSpaceTooLarge";
    case ErrorCode::MoveBudgetExceeded: return "MoveBudgetExceeded";
    case ErrorCode::InvalidStart: return "InvalidStart";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonReversibleKernel: return "NonReversibleKernel";
    case ErrorCode::DegenerateBase: return "DegenerateBase";
    case ErrorCode::EllTooLarge: return "EllTooLarge";
    case ErrorCode::NotErgodic: return "NotErgodic";
    case ErrorCode::IterationCapExceeded: return "IterationCapExceeded";
    case ErrorCode::NonpositiveRho: return "NonpositiveRho";
    case ErrorCode::SupportMismatch: return "SupportMismatch";
    case ErrorCode::NegativeFunction: return "NegativeFunction";
    case ErrorCode::InfeasibleMarginal: return "InfeasibleMarginal";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NumericalBreakdown: return "NumericalBreakdown";
    case ErrorCode::ContractionNotCertified: return "ContractionNotCertified";
    case ErrorCode::AsymmetricMatrix: return "AsymmetricMatrix";
    case ErrorCode::NormTooLarge: return "NormTooLarge";
    case ErrorCode::ConfigParseError: return "ConfigParseError";
    case ErrorCode::InputNotFound: return "InputNotFound";
  }
  return "Unknown";
}

}  // namespace ew
