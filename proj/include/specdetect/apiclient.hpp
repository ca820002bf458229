#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "specdetect/dataio.hpp"
#include "specdetect/signal.hpp"

namespace specdetect {

// OpenAI-compatible completions endpoint. Requests go to
// POST {base_url}/completions with the prompt echoed and zero new tokens.
struct EndpointConfig {
  std::string base_url;  // e.g. http://localhost:8000/v1
  std::string api_key;   // sent as a bearer token, never logged
  std::string model;
  int top_logprobs_k = 5;  // provider ceiling is 20
  double timeout_s = 30.0;
  std::size_t max_concurrent = 4;
  std::size_t max_retries = 3;
  std::uint64_t backoff_base_ms = 500;

  void validate() const;
};

inline constexpr const char* kApiKeyEnv = "SPECDETECT_API_KEY";
inline constexpr const char* kBaseUrlEnv = "SPECDETECT_BASE_URL";

// Fills api_key and, when unset, base_url from the environment.
void apply_environment(EndpointConfig& cfg);

nlohmann::json build_completion_request(std::string_view text, const EndpointConfig& cfg);

// Turns a completions response into a signal. The first token has no
// conditional logprob and is dropped. When usage.prompt_tokens is reported
// only that many leading tokens are read. Ranks are the realized token's
// 1-based position in the returned candidate list, and are omitted if any
// position's list does not contain the realized token.
TokenSignal parse_completion_response(const nlohmann::json& response, int top_logprobs_k);

struct TextItem {
  std::string id;
  Label label = Label::Human;
  std::string text;
};

struct FetchFailure {
  std::string id;
  std::string error;  // ErrorCode label
  std::string message;
};

struct FetchReport {
  std::vector<DatasetRecord> records;  // input order, failures skipped
  std::vector<FetchFailure> failures;
};

struct ClientMetrics {
  std::size_t requests = 0;  // HTTP attempts, including retries
  std::size_t retries = 0;
  std::size_t max_in_flight = 0;
  std::vector<std::uint64_t> backoff_delays_ms;
};

// Thread-safe; one connection per request.
class CompletionsClient {
 public:
  explicit CompletionsClient(EndpointConfig cfg);

  // Throws InvalidInput for empty text, then HttpError, AuthError,
  // RateLimited (after max_retries), TimeoutError or SchemaError.
  TokenSignal fetch_logprobs(std::string_view text) const;

  // At most max_concurrent requests in flight.
  FetchReport fetch_corpus(std::span<const TextItem> items) const;

  ClientMetrics metrics() const;
  const EndpointConfig& config() const noexcept { return cfg_; }

 private:
  nlohmann::json post_with_retries(const nlohmann::json& body) const;
  std::string scrub(std::string message) const;

  EndpointConfig cfg_;
  std::string scheme_host_;
  std::string path_prefix_;

  mutable std::mutex mutex_;
  mutable ClientMetrics metrics_;
  mutable std::atomic<std::size_t> in_flight_{0};
};

// Rows {id, label, text} for the extract path.
std::vector<TextItem> read_text_items(const std::filesystem::path& path);

}  // namespace specdetect
