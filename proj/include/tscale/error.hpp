#pragma once

#include <stdexcept>
#include <string>

namespace tscale {

/// Failure categories shared by every module. The C API maps these one to one
/// onto status codes.
enum class ErrorCode {
  EmptyScale,
  NonFinite,
  NotMember,
  DegenerateScale,
  BadWindow,
  SyntaxError,
  UnknownFunction,
  UnboundVariable,
  DomainError,
  NotDifferentiable,
  OutsideKappa,
  MissingSample,
  InfeasibleControl,
  NoFeasibleControl,
  BlowUp,
  ImplicitSolveFailed,
  NonRegressive,
  NoEgressCertificate,
  ParseError,
  ValidationError,
  InvalidArgument,
  IoError,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

}  // namespace tscale
