#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ragcap {

enum class ErrorCode {
  ZeroVector,
  NonFinite,
  DimMismatch,
  NotUnitNorm,
  DuplicateId,
  EmptyText,
  EmptyStore,
  CorruptHeader,
  CountMismatch,
  MalformedRecord,
  IoError,
  InvalidConfig,
  NonPositiveTemperature,
  DegenerateSum,
  BackendUnavailable,
  MalformedResponse,
  Timeout,
  NoSource,
  MissingGroundTruth,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception carrying a machine-checkable ErrorCode alongside a message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ragcap
