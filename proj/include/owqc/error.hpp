#pragma once

#include <stdexcept>
#include <string>

namespace owqc {

enum class ErrorCode {
  SingularBlock = 10,
  DimensionMismatch = 11,
  NotPositiveDefinite = 12,
  InvalidGraph = 20,
  NotOrthogonal = 21,
  InvalidPartition = 22,
  InvalidWeight = 30,
  DegenerateAngles = 31,
  DecompositionFailure = 32,
  OutOfBranch = 33,
  LayoutMismatch = 40,
  SingularA12 = 41,
  DegenerateD = 42,
  TooLarge = 50,
  BudgetExhausted = 51,
  DegenerateVariance = 60,
  ParseError = 70,
};

inline const char* error_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::SingularBlock: return "SingularBlock";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::InvalidGraph: return "InvalidGraph";
    case ErrorCode::NotOrthogonal: return "NotOrthogonal";
    case ErrorCode::InvalidPartition: return "InvalidPartition";
    case ErrorCode::InvalidWeight: return "InvalidWeight";
    case ErrorCode::DegenerateAngles: return "DegenerateAngles";
    case ErrorCode::DecompositionFailure: return "DecompositionFailure";
    case ErrorCode::OutOfBranch: return "OutOfBranch";
    case ErrorCode::LayoutMismatch: return "LayoutMismatch";
    case ErrorCode::SingularA12: return "SingularA12";
    case ErrorCode::DegenerateD: return "DegenerateD";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::BudgetExhausted: return "BudgetExhausted";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace owqc
