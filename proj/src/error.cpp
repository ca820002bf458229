#include "specdetect/error.hpp"

namespace specdetect {

std::string_view error_label(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptySignal: return "EmptySignal";
    case ErrorCode::InvalidWindowLength: return "InvalidWindowLength";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::MissingDistributions: return "MissingDistributions";
    case ErrorCode::InsufficientSupport: return "InsufficientSupport";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::DegenerateRanks: return "DegenerateRanks";
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::NonFiniteScore: return "NonFiniteScore";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::HttpError: return "HttpError";
    case ErrorCode::AuthError: return "AuthError";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::TimeoutError: return "TimeoutError";
    case ErrorCode::SchemaError: return "SchemaError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(message), code_(code) {}

Error validation_error(std::string field, const std::string& message) {
  Error e(ErrorCode::ValidationError, field + ": " + message);
  e.field = std::move(field);
  return e;
}

}  // namespace specdetect
