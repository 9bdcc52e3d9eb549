#include "ragcap/error.hpp"

namespace ragcap {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::NotUnitNorm: return "NotUnitNorm";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::EmptyStore: return "EmptyStore";
    case ErrorCode::CorruptHeader: return "CorruptHeader";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::NonPositiveTemperature: return "NonPositiveTemperature";
    case ErrorCode::DegenerateSum: return "DegenerateSum";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::NoSource: return "NoSource";
    case ErrorCode::MissingGroundTruth: return "MissingGroundTruth";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace ragcap
