#include "riffle/error.hpp"

namespace riffle {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DegenerateMeasure: return "DegenerateMeasure";
    case ErrorCode::InvalidChi: return "InvalidChi";
    case ErrorCode::NoBracket: return "NoBracket";
    case ErrorCode::AllZero: return "AllZero";
    case ErrorCode::VertexPoint: return "VertexPoint";
    case ErrorCode::NotInPsiClass: return "NotInPsiClass";
    case ErrorCode::CounterexampleFailed: return "CounterexampleFailed";
    case ErrorCode::ScaleTooSmall: return "ScaleTooSmall";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::TooFewSteps: return "TooFewSteps";
    case ErrorCode::DegenerateMixture: return "DegenerateMixture";
    case ErrorCode::QuotaInfeasible: return "QuotaInfeasible";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace riffle
