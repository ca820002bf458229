#include "specdetect/apiclient.hpp"

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <set>
#include <thread>

#include "specdetect/error.hpp"

namespace specdetect {

using nlohmann::json;

namespace {

struct ParsedUrl {
  std::string scheme_host;  // scheme://host[:port]
  std::string path;         // no trailing slash
};

ParsedUrl parse_base_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos || scheme_end == 0) {
    throw Error(ErrorCode::InvalidConfig, "base_url must be an absolute http(s) URL");
  }
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw Error(ErrorCode::InvalidConfig, "base_url scheme must be http or https");
  }
  const auto host_start = scheme_end + 3;
  const auto path_start = url.find('/', host_start);
  ParsedUrl out;
  out.scheme_host = url.substr(0, path_start);
  if (out.scheme_host.size() <= host_start) throw Error(ErrorCode::InvalidConfig, "base_url has no host");
  out.path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  return out;
}

Error schema_error(const std::string& message) { return Error(ErrorCode::SchemaError, message); }

Error http_error(ErrorCode code, int status, const std::string& message) {
  Error e(code, message);
  e.status = status;
  return e;
}

}  // namespace

void EndpointConfig::validate() const {
  parse_base_url(base_url);
  if (model.empty()) throw Error(ErrorCode::InvalidConfig, "model must be set");
  if (top_logprobs_k < 0 || top_logprobs_k > 20) {
    throw Error(ErrorCode::InvalidConfig, "top_logprobs_k must lie in [0, 20]");
  }
  if (!(timeout_s > 0.0)) throw Error(ErrorCode::InvalidConfig, "timeout_s must be positive");
  if (max_concurrent == 0) throw Error(ErrorCode::InvalidConfig, "max_concurrent must be >= 1");
  if (backoff_base_ms == 0) throw Error(ErrorCode::InvalidConfig, "backoff_base_ms must be >= 1");
}

void apply_environment(EndpointConfig& cfg) {
  if (const char* key = std::getenv(kApiKeyEnv)) cfg.api_key = key;
  if (cfg.base_url.empty()) {
    if (const char* url = std::getenv(kBaseUrlEnv)) cfg.base_url = url;
  }
}

json build_completion_request(std::string_view text, const EndpointConfig& cfg) {
  json body;
  body["model"] = cfg.model;
  body["prompt"] = std::string(text);
  body["max_tokens"] = 0;
  body["echo"] = true;
  body["temperature"] = 0;
  body["logprobs"] = cfg.top_logprobs_k;
  return body;
}

TokenSignal parse_completion_response(const json& response, int top_logprobs_k) {
  if (!response.is_object() || !response.contains("choices") || !response["choices"].is_array() ||
      response["choices"].empty()) {
    throw schema_error("response has no choices");
  }
  const json& choice = response["choices"][0];
  if (!choice.is_object() || !choice.contains("logprobs") || !choice["logprobs"].is_object()) {
    throw schema_error("choice has no logprobs object");
  }
  const json& lp = choice["logprobs"];
  if (!lp.contains("tokens") || !lp["tokens"].is_array() || !lp.contains("token_logprobs") ||
      !lp["token_logprobs"].is_array()) {
    throw schema_error("logprobs lacks tokens/token_logprobs arrays");
  }
  const json& tokens = lp["tokens"];
  const json& token_logprobs = lp["token_logprobs"];
  if (tokens.size() != token_logprobs.size()) throw schema_error("tokens and token_logprobs differ in length");

  std::size_t count = tokens.size();
  if (response.contains("usage") && response["usage"].is_object() &&
      response["usage"].contains("prompt_tokens")) {
    const json& reported = response["usage"]["prompt_tokens"];
    if (!reported.is_number_integer() || reported.get<std::int64_t>() < 0) {
      throw schema_error("usage.prompt_tokens is not a count");
    }
    const auto n = reported.get<std::size_t>();
    if (n > count) throw schema_error("fewer tokens returned than usage.prompt_tokens reports");
    count = n;
  }
  if (count < 2) throw Error(ErrorCode::InvalidInput, "text must span at least two tokens");

  TokenSignal signal;
  std::vector<std::string> toks;
  for (std::size_t i = 1; i < count; ++i) {
    if (!tokens[i].is_string()) throw schema_error("token " + std::to_string(i) + " is not a string");
    if (!token_logprobs[i].is_number()) {
      throw schema_error("token_logprobs[" + std::to_string(i) + "] is missing");
    }
    toks.push_back(tokens[i].get<std::string>());
    signal.values.push_back(token_logprobs[i].get<double>());
  }
  signal.tokens = std::move(toks);

  const bool want_top = top_logprobs_k > 0 && lp.contains("top_logprobs") && lp["top_logprobs"].is_array();
  if (want_top) {
    const json& top = lp["top_logprobs"];
    if (top.size() < count) throw schema_error("top_logprobs shorter than tokens");
    std::vector<std::vector<Candidate>> lists;
    std::vector<std::uint64_t> ranks;
    bool ranks_complete = true;
    for (std::size_t i = 1; i < count; ++i) {
      if (!top[i].is_object() || top[i].empty()) {
        throw schema_error("top_logprobs[" + std::to_string(i) + "] is not a non-empty object");
      }
      std::vector<Candidate> list;
      for (const auto& [tok, value] : top[i].items()) {
        if (!value.is_number()) throw schema_error("top_logprobs value is not a number");
        list.push_back({tok, value.get<double>()});
      }
      std::sort(list.begin(), list.end(), [](const Candidate& a, const Candidate& b) {
        return a.logprob != b.logprob ? a.logprob > b.logprob : a.token < b.token;
      });
      const auto& realized = (*signal.tokens)[i - 1];
      const auto it = std::find_if(list.begin(), list.end(), [&](const Candidate& c) { return c.token == realized; });
      if (it == list.end()) {
        ranks_complete = false;
      } else {
        ranks.push_back(static_cast<std::uint64_t>(it - list.begin()) + 1);
      }
      lists.push_back(std::move(list));
    }
    signal.top_candidates = std::move(lists);
    if (ranks_complete) signal.ranks = std::move(ranks);
  }
  return signal;
}

CompletionsClient::CompletionsClient(EndpointConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const auto url = parse_base_url(cfg_.base_url);
  scheme_host_ = url.scheme_host;
  path_prefix_ = url.path;
}

std::string CompletionsClient::scrub(std::string message) const {
  if (cfg_.api_key.empty()) return message;
  for (auto pos = message.find(cfg_.api_key); pos != std::string::npos; pos = message.find(cfg_.api_key, pos)) {
    message.replace(pos, cfg_.api_key.size(), "***");
  }
  return message;
}

json CompletionsClient::post_with_retries(const json& body) const {
  const std::string payload = body.dump();
  const std::string path = path_prefix_ + "/completions";
  const auto timeout = std::chrono::duration<double>(cfg_.timeout_s);

  for (std::size_t attempt = 0;; ++attempt) {
    httplib::Client client(scheme_host_);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    httplib::Headers headers;
    if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

    {
      const std::size_t now = ++in_flight_;
      std::lock_guard lock(mutex_);
      ++metrics_.requests;
      metrics_.max_in_flight = std::max(metrics_.max_in_flight, now);
    }
    const auto start = std::chrono::steady_clock::now();
    auto result = client.Post(path, headers, payload, "application/json");
    --in_flight_;

    if (!result) {
      const auto err = result.error();
      const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                             (err == httplib::Error::Read && std::chrono::steady_clock::now() - start >= timeout * 0.9);
      if (timed_out) throw Error(ErrorCode::TimeoutError, "request timed out after " + std::to_string(cfg_.timeout_s) + " s");
      throw http_error(ErrorCode::HttpError, 0, "network error: " + httplib::to_string(err));
    }

    const int status = result->status;
    if (status == 200) {
      try {
        return json::parse(result->body);
      } catch (const json::parse_error&) {
        throw schema_error("response body is not JSON");
      }
    }
    if (status == 401 || status == 403) {
      throw http_error(ErrorCode::AuthError, status, "authentication rejected (HTTP " + std::to_string(status) + ")");
    }
    const bool retryable = status == 429 || status >= 500;
    if (retryable && attempt < cfg_.max_retries) {
      const std::uint64_t delay = cfg_.backoff_base_ms << attempt;
      {
        std::lock_guard lock(mutex_);
        ++metrics_.retries;
        metrics_.backoff_delays_ms.push_back(delay);
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(delay));
      continue;
    }
    const std::string detail = scrub(result->body.substr(0, 200));
    if (status == 429) {
      throw http_error(ErrorCode::RateLimited, status,
                       "rate limited after " + std::to_string(attempt) + " retries");
    }
    throw http_error(ErrorCode::HttpError, status, "HTTP " + std::to_string(status) + ": " + detail);
  }
}

TokenSignal CompletionsClient::fetch_logprobs(std::string_view text) const {
  if (text.empty()) throw Error(ErrorCode::InvalidInput, "text must be non-empty");
  const json response = post_with_retries(build_completion_request(text, cfg_));
  return parse_completion_response(response, cfg_.top_logprobs_k);
}

FetchReport CompletionsClient::fetch_corpus(std::span<const TextItem> items) const {
  std::set<std::string> ids;
  for (const auto& item : items) {
    if (!ids.insert(item.id).second) throw Error(ErrorCode::InvalidInput, "duplicate id \"" + item.id + "\"");
  }

  struct Slot {
    std::optional<DatasetRecord> record;
    std::optional<FetchFailure> failure;
  };
  std::vector<Slot> slots(items.size());
  std::atomic<std::size_t> next{0};
  const std::string provenance = "api:" + cfg_.model + ":top_k=" + std::to_string(cfg_.top_logprobs_k);

  auto worker = [&] {
    for (std::size_t i = next++; i < items.size(); i = next++) {
      const auto& item = items[i];
      try {
        TokenSignal s = fetch_logprobs(item.text);
        DatasetRecord r;
        r.id = item.id;
        r.label = item.label;
        r.source_model = cfg_.model;
        r.text = item.text;
        r.tokens = std::move(s.tokens);
        r.logprobs = std::move(s.values);
        r.ranks = std::move(s.ranks);
        r.top_logprobs = std::move(s.top_candidates);
        r.extra["provenance"] = provenance;
        validate_record(r);
        slots[i].record = std::move(r);
      } catch (const Error& e) {
        slots[i].failure = FetchFailure{item.id, std::string(e.label()), scrub(e.what())};
      } catch (const std::exception& e) {
        slots[i].failure = FetchFailure{item.id, "Unexpected", scrub(e.what())};
      }
    }
  };

  const std::size_t n_workers = std::min(cfg_.max_concurrent, std::max<std::size_t>(items.size(), 1));
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }

  FetchReport report;
  for (auto& slot : slots) {
    if (slot.record) report.records.push_back(std::move(*slot.record));
    if (slot.failure) report.failures.push_back(std::move(*slot.failure));
  }
  return report;
}

ClientMetrics CompletionsClient::metrics() const {
  std::lock_guard lock(mutex_);
  return metrics_;
}

std::vector<TextItem> read_text_items(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<TextItem> items;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    auto fail = [&](ErrorCode code, const std::string& msg) {
      Error e(code, "line " + std::to_string(line_no) + ": " + msg);
      e.line = line_no;
      return e;
    };
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw fail(ErrorCode::ParseError, e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("text") ||
        !j["text"].is_string() || !j.contains("label") || !j["label"].is_string()) {
      throw fail(ErrorCode::ValidationError, "rows need string fields id, label and text");
    }
    const auto label = parse_label(j["label"].get<std::string>());
    if (!label) throw fail(ErrorCode::ValidationError, "label must be \"human\" or \"machine\"");
    items.push_back({j["id"].get<std::string>(), *label, j["text"].get<std::string>()});
  }
  return items;
}

}  // namespace specdetect
