#ifndef BAYGAZE_ERROR_HPP_
#define BAYGAZE_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace baygaze {

enum class ErrorCode {
  kInvalidArgument,
  kNonPositiveDepth,
  kNoIntersection,
  kOutOfFrame,
  kIoError,
  kFormatError,
  kDegenerateConfiguration,
  kSingularCovariance,
  kInsufficientData,
  kShapeMismatch,
  kNonFiniteState,
  kAllSamplesFailed,
};

const char* error_code_name(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kNonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::kNoIntersection: return "NoIntersection";
    case ErrorCode::kOutOfFrame: return "OutOfFrame";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kFormatError: return "FormatError";
    case ErrorCode::kDegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::kSingularCovariance: return "SingularCovariance";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNonFiniteState: return "NonFiniteState";
    case ErrorCode::kAllSamplesFailed: return "AllSamplesFailed";
  }
  return "Unknown";
}

}  // namespace baygaze

#endif  // BAYGAZE_ERROR_HPP_
