#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace bimanifold {

enum class ErrorCode {
  RotationNearPi,
  EvaluationFailure,
  InvalidModel,
  Unreachable,
  ElbowSingular,
  JointLimitViolation,
  DegenerateSEW,
  UnreachableGrasp,
  PathInfeasible,
  StreamExhausted,
  SchemaMismatch,
  MalformedRecord,
  IkFailureDuringPerturb,
  EmptyDataset,
  NoTransportPhase,
  MissingEventLog,
  InvalidCounts,
  RankDeficient,
  DegenerateSample,
  GridTooCoarse,
  InsufficientCategory,
  InvalidArgument,
  ConfigError,
  IoError,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::RotationNearPi: return "RotationNearPi";
    case ErrorCode::EvaluationFailure: return "EvaluationFailure";
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::Unreachable: return "Unreachable";
    case ErrorCode::ElbowSingular: return "ElbowSingular";
    case ErrorCode::JointLimitViolation: return "JointLimitViolation";
    case ErrorCode::DegenerateSEW: return "DegenerateSEW";
    case ErrorCode::UnreachableGrasp: return "UnreachableGrasp";
    case ErrorCode::PathInfeasible: return "PathInfeasible";
    case ErrorCode::StreamExhausted: return "StreamExhausted";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::IkFailureDuringPerturb: return "IkFailureDuringPerturb";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::NoTransportPhase: return "NoTransportPhase";
    case ErrorCode::MissingEventLog: return "MissingEventLog";
    case ErrorCode::InvalidCounts: return "InvalidCounts";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::DegenerateSample: return "DegenerateSample";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::InsufficientCategory: return "InsufficientCategory";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Base exception for every failure raised by the library. The code lets
/// callers branch on the failure kind without RTTI.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class JointLimitError : public Error {
 public:
  JointLimitError(std::vector<int> joints, const std::string& what)
      : Error(ErrorCode::JointLimitViolation, what), joints_(std::move(joints)) {}

  /// Zero-based indices of the joints outside their limits.
  const std::vector<int>& joints() const noexcept { return joints_; }

 private:
  std::vector<int> joints_;
};

class RankDeficientError : public Error {
 public:
  RankDeficientError(double sigma_min, const std::string& what)
      : Error(ErrorCode::RankDeficient, what), sigma_min_(sigma_min) {}

  double sigma_min() const noexcept { return sigma_min_; }

 private:
  double sigma_min_;
};

class MalformedRecordError : public Error {
 public:
  MalformedRecordError(std::size_t line, const std::string& what)
      : Error(ErrorCode::MalformedRecord, "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace bimanifold
