#include "eppnet/error.hpp"

namespace eppnet {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::MalformedNumber: return "MalformedNumber";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::JointCountMismatch: return "JointCountMismatch";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::TopologyShapeMismatch: return "TopologyShapeMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyIntersection: return "EmptyIntersection";
    case ErrorCode::FrameSizeMismatch: return "FrameSizeMismatch";
    case ErrorCode::GridTooSmall: return "GridTooSmall";
    case ErrorCode::SampleMismatch: return "SampleMismatch";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::MissingScores: return "MissingScores";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::StageDependencyMissing: return "StageDependencyMissing";
    case ErrorCode::IoError: return "IoError";
  }
  return "UnknownError";
}

}  // namespace eppnet
