#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace valcs {

enum class ErrorCode {
  kInvalidArgument,
  kInvalidBudget,
  kInvalidConfig,
  kGeometryMismatch,
  kEmptyInput,
  kTruncated,
  kMalformedStream,
  kPlanMismatch,
  kNonFinite,
  kPlugin,
  kIo,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kInvalidBudget: return "invalid-budget";
    case ErrorCode::kInvalidConfig: return "invalid-config";
    case ErrorCode::kGeometryMismatch: return "geometry-mismatch";
    case ErrorCode::kEmptyInput: return "empty-input";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kMalformedStream: return "malformed-stream";
    case ErrorCode::kPlanMismatch: return "plan-mismatch";
    case ErrorCode::kNonFinite: return "non-finite";
    case ErrorCode::kPlugin: return "plugin";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

// All library failures are reported as valcs::Error. The code is stable and
// meant for programmatic handling; what() carries a human readable message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Bitstream failure that can be attributed to a specific frame.
class StreamError : public Error {
 public:
  StreamError(ErrorCode code, const std::string& message,
              std::optional<std::size_t> frame_index = std::nullopt)
      : Error(code, frame_index ? message + " (frame " + std::to_string(*frame_index) + ")"
                                : message),
        frame_index_(frame_index) {}

  std::optional<std::size_t> frame_index() const noexcept { return frame_index_; }

 private:
  std::optional<std::size_t> frame_index_;
};

}  // namespace valcs
