#pragma once

#include <stdexcept>
#include <string>

namespace semiclab {

enum class ErrorCode {
  Resolution,
  Aliasing,
  Dimension,
  NonHermitian,
  GridMismatch,
  Exponent,
  NotPsd,
  Singularity,
  QuadratureFail,
  FitUnderdetermined,
  NonpositiveError,
  Io,
  Config,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::Resolution: return "RESOLUTION_ERROR";
    case ErrorCode::Aliasing: return "ALIASING_ERROR";
    case ErrorCode::Dimension: return "DIMENSION_ERROR";
    case ErrorCode::NonHermitian: return "NON_HERMITIAN";
    case ErrorCode::GridMismatch: return "GRID_MISMATCH";
    case ErrorCode::Exponent: return "EXPONENT_ERROR";
    case ErrorCode::NotPsd: return "NOT_PSD";
    case ErrorCode::Singularity: return "SINGULARITY_ERROR";
    case ErrorCode::QuadratureFail: return "QUADRATURE_FAIL";
    case ErrorCode::FitUnderdetermined: return "FIT_UNDERDETERMINED";
    case ErrorCode::NonpositiveError: return "NONPOSITIVE_ERROR";
    case ErrorCode::Io: return "IO_ERROR";
    case ErrorCode::Config: return "CONFIG_ERROR";
  }
  return "UNKNOWN_ERROR";
}

}  // namespace semiclab
