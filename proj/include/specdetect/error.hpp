#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace specdetect {

enum class ErrorCode {
  EmptySignal,
  InvalidWindowLength,
  InvalidConfig,
  MissingDistributions,
  InsufficientSupport,
  DegenerateVariance,
  MissingField,
  DegenerateRanks,
  EmptyClass,
  NonFiniteScore,
  TooFewSamples,
  EmptyCorpus,
  ParseError,
  ValidationError,
  DuplicateId,
  IoError,
  InvalidInput,
  HttpError,
  AuthError,
  RateLimited,
  TimeoutError,
  SchemaError,
};

std::string_view error_label(ErrorCode code);

// Every failure in the library is reported through this type. `line` is set
// for corpus parse/validation errors, `field` names the offending record
// field, and `status` carries the HTTP status for network errors.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  std::string_view label() const noexcept { return error_label(code_); }

  std::optional<std::size_t> line;
  std::optional<std::string> field;
  std::optional<int> status;

 private:
  ErrorCode code_;
};

Error validation_error(std::string field, const std::string& message);

}  // namespace specdetect
