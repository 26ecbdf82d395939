#pragma once

#include <stdexcept>
#include <string>

namespace eppnet {

enum class ErrorCode {
  TruncatedFile,
  MalformedNumber,
  NonFiniteValue,
  JointCountMismatch,
  EmptySequence,
  TopologyShapeMismatch,
  ShapeMismatch,
  IndexOutOfRange,
  LabelOutOfRange,
  LengthMismatch,
  EmptyIntersection,
  FrameSizeMismatch,
  GridTooSmall,
  SampleMismatch,
  EmptyDataset,
  MissingScores,
  ConfigError,
  StageDependencyMissing,
  IoError,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace eppnet
