#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace citegen {

enum class ErrorCode {
  kMaxRefsExceeded,
  kSplitTooSmall,
  kVocabTooSmall,
  kClassMissing,
  kShapeError,
  kNumericalError,
  kDivergence,
  kEmptyEvalSet,
  kAlignmentError,
  kMissingFile,
  kConfigError,
  kFormatError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace citegen
