#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace chainkit {

enum class ErrorCode {
  AsymmetricDistance,
  NegativeDistance,
  ZeroOffDiagonal,
  NonZeroDiagonal,
  TriangleViolation,
  NonFiniteDistance,
  NotSquare,
  InvalidMeasure,
  InvalidSpec,
  DomainError,
  InvalidR,
  LevelBelowBase,
  InvalidLevels,
  DimensionMismatch,
  DegenerateSpace,
  DegenerateK,
  NotYoung,
  NotVerifiedPsi,
  NotPSD,
  IncrementConditionUnmet,
  EmptySubset,
  ParseError,
  IoError,
  VersionMismatch,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::AsymmetricDistance: return "AsymmetricDistance";
    case ErrorCode::NegativeDistance: return "NegativeDistance";
    case ErrorCode::ZeroOffDiagonal: return "ZeroOffDiagonal";
    case ErrorCode::NonZeroDiagonal: return "NonZeroDiagonal";
    case ErrorCode::TriangleViolation: return "TriangleViolation";
    case ErrorCode::NonFiniteDistance: return "NonFiniteDistance";
    case ErrorCode::NotSquare: return "NotSquare";
    case ErrorCode::InvalidMeasure: return "InvalidMeasure";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::InvalidR: return "InvalidR";
    case ErrorCode::LevelBelowBase: return "LevelBelowBase";
    case ErrorCode::InvalidLevels: return "InvalidLevels";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DegenerateSpace: return "DegenerateSpace";
    case ErrorCode::DegenerateK: return "DegenerateK";
    case ErrorCode::NotYoung: return "NotYoung";
    case ErrorCode::NotVerifiedPsi: return "NotVerifiedPsi";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::IncrementConditionUnmet: return "IncrementConditionUnmet";
    case ErrorCode::EmptySubset: return "EmptySubset";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
  }
  return "Unknown";
}

/// Exception carrying a machine-checkable code next to the human message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Thrown by build_metric_space when a triple breaks the triangle inequality.
class TriangleViolationError : public Error {
 public:
  TriangleViolationError(std::size_t i, std::size_t j, std::size_t k, const std::string& message)
      : Error(ErrorCode::TriangleViolation, message), i_(i), j_(j), k_(k) {}

  std::size_t i() const noexcept { return i_; }
  std::size_t j() const noexcept { return j_; }
  std::size_t k() const noexcept { return k_; }

 private:
  std::size_t i_, j_, k_;
};

}  // namespace chainkit
