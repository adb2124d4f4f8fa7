#include "tscale/error.hpp"

namespace tscale {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptyScale: return "EmptyScale";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NotMember: return "NotMember";
    case ErrorCode::DegenerateScale: return "DegenerateScale";
    case ErrorCode::BadWindow: return "BadWindow";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UnknownFunction: return "UnknownFunction";
    case ErrorCode::UnboundVariable: return "UnboundVariable";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::NotDifferentiable: return "NotDifferentiable";
    case ErrorCode::OutsideKappa: return "OutsideKappa";
    case ErrorCode::MissingSample: return "MissingSample";
    case ErrorCode::InfeasibleControl: return "InfeasibleControl";
    case ErrorCode::NoFeasibleControl: return "NoFeasibleControl";
    case ErrorCode::BlowUp: return "BlowUp";
    case ErrorCode::ImplicitSolveFailed: return "ImplicitSolveFailed";
    case ErrorCode::NonRegressive: return "NonRegressive";
    case ErrorCode::NoEgressCertificate: return "NoEgressCertificate";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace tscale
