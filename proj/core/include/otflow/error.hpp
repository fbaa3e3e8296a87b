#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace otflow {

enum class ErrorCode {
  kDimensionMismatch,
  kValueOutOfRange,
  kNonFiniteValue,
  kNonFiniteScore,
  kInvalidConfig,
  kIterationExhausted,
  kWeightNotConvex,
  kEmptyPredictionList,
  kEmptyMask,
  kBadMagic,
  kTruncatedFile,
  kOutOfRepresentableRange,
  kDegenerateAffine,
  kIo,
};

std::string_view to_string(ErrorCode code);

// Every library failure is reported through this type; callers switch on
// code() rather than parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace otflow
