#include "specdetect/apiclient.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "../support/mock_completions.hpp"
#include "specdetect/error.hpp"

using namespace specdetect;
using specdetect::test_support::echo_payload;
using specdetect::test_support::MockCompletions;
using nlohmann::json;

namespace {

const std::string kSecret = "sk-test-5ecret-value";

json golden() {
  std::ifstream in(std::string(SPECDETECT_TEST_DATA) + "/mock_completion.json");
  return json::parse(in);
}

EndpointConfig config_for(const MockCompletions& mock) {
  EndpointConfig cfg;
  cfg.base_url = mock.base_url();
  cfg.api_key = kSecret;
  cfg.model = "mock-model";
  cfg.top_logprobs_k = 3;
  cfg.timeout_s = 5.0;
  cfg.max_concurrent = 2;
  cfg.max_retries = 3;
  cfg.backoff_base_ms = 5;
  return cfg;
}

MockCompletions::Handler echo_handler() {
  return [](const json& body, httplib::Response& res) {
    res.set_content(echo_payload(body["prompt"].get<std::string>(), body["logprobs"].get<int>()).dump(),
                    "application/json");
  };
}

ErrorCode fetch_error(const CompletionsClient& client, const std::string& text) {
  try {
    client.fetch_logprobs(text);
  } catch (const Error& e) {
    EXPECT_EQ(std::string(e.what()).find(kSecret), std::string::npos);
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::InvalidInput;
}

}  // namespace

TEST(CompletionRequest, Fields) {
  EndpointConfig cfg;
  cfg.model = "m";
  cfg.top_logprobs_k = 7;
  const auto body = build_completion_request("hi there", cfg);
  EXPECT_EQ(body["model"], "m");
  EXPECT_EQ(body["prompt"], "hi there");
  EXPECT_EQ(body["max_tokens"], 0);
  EXPECT_EQ(body["echo"], true);
  EXPECT_EQ(body["temperature"], 0);
  EXPECT_EQ(body["logprobs"], 7);
}

TEST(CompletionResponse, GoldenPayload) {
  const auto s = parse_completion_response(golden(), 3);
  EXPECT_EQ(s.values, (std::vector<double>{-4.25, -2.5, -0.75}));
  EXPECT_EQ(*s.tokens, (std::vector<std::string>{" cat", " sat", "."}));
  ASSERT_TRUE(s.top_candidates.has_value());
  EXPECT_EQ((*s.top_candidates)[0].front(), (Candidate{" dog", -1.5}));
  EXPECT_EQ((*s.top_candidates)[0].back(), (Candidate{" cat", -4.25}));
  // "." is missing from its candidate list, so ranks cannot be derived.
  EXPECT_FALSE(s.ranks.has_value());
  EXPECT_FALSE(s.entropies.has_value());
  EXPECT_NO_THROW(s.validate());
}

TEST(CompletionResponse, RanksWhenEveryTokenListed) {
  auto payload = golden();
  payload["choices"][0]["logprobs"]["top_logprobs"][3]["."] = -0.75;
  const auto s = parse_completion_response(payload, 3);
  ASSERT_TRUE(s.ranks.has_value());
  EXPECT_EQ(*s.ranks, (std::vector<std::uint64_t>{3, 1, 1}));
}

TEST(CompletionResponse, ZeroKSkipsCandidates) {
  const auto s = parse_completion_response(golden(), 0);
  EXPECT_FALSE(s.top_candidates.has_value());
  EXPECT_FALSE(s.ranks.has_value());
}

TEST(CompletionResponse, ReportedTokenCountBoundsSignal) {
  auto payload = golden();
  payload["usage"]["prompt_tokens"] = 3;
  EXPECT_EQ(parse_completion_response(payload, 3).size(), 2u);
  payload["usage"]["prompt_tokens"] = 9;
  EXPECT_THROW(parse_completion_response(payload, 3), Error);
}

TEST(CompletionResponse, SchemaErrors) {
  const auto expect_schema = [](json payload) {
    try {
      parse_completion_response(payload, 3);
      ADD_FAILURE() << payload.dump();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::SchemaError) << payload.dump();
    }
  };
  expect_schema(json::object());
  auto p = golden();
  p["choices"][0].erase("logprobs");
  expect_schema(p);
  p = golden();
  p["choices"][0]["logprobs"].erase("token_logprobs");
  expect_schema(p);
  p = golden();
  p["choices"][0]["logprobs"]["token_logprobs"][2] = nullptr;
  expect_schema(p);
  p = golden();
  p["choices"][0]["logprobs"]["tokens"].push_back("x");
  expect_schema(p);
}

TEST(EndpointConfig, Validation) {
  EndpointConfig cfg;
  cfg.base_url = "http://localhost:1/v1";
  cfg.model = "m";
  EXPECT_NO_THROW(cfg.validate());
  auto bad = cfg;
  bad.base_url = "localhost/v1";
  EXPECT_THROW(bad.validate(), Error);
  bad = cfg;
  bad.top_logprobs_k = 21;
  EXPECT_THROW(bad.validate(), Error);
  bad = cfg;
  bad.max_concurrent = 0;
  EXPECT_THROW(bad.validate(), Error);
  bad = cfg;
  bad.timeout_s = 0;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(EndpointConfig, Environment) {
  ::setenv(kApiKeyEnv, "env-key", 1);
  ::setenv(kBaseUrlEnv, "http://env-host/v1", 1);
  EndpointConfig cfg;
  apply_environment(cfg);
  EXPECT_EQ(cfg.api_key, "env-key");
  EXPECT_EQ(cfg.base_url, "http://env-host/v1");
  cfg.base_url = "http://flag-host/v1";
  apply_environment(cfg);
  EXPECT_EQ(cfg.base_url, "http://flag-host/v1");
  ::unsetenv(kApiKeyEnv);
  ::unsetenv(kBaseUrlEnv);
}

TEST(FetchLogprobs, GoldenTranscript) {
  MockCompletions mock([](const json&, httplib::Response& res) { res.set_content(golden().dump(), "application/json"); });
  const CompletionsClient client(config_for(mock));
  const auto s = client.fetch_logprobs("The cat sat.");
  EXPECT_EQ(s.values, (std::vector<double>{-4.25, -2.5, -0.75}));
  const auto sent = json::parse(mock.bodies().at(0));
  EXPECT_EQ(sent, build_completion_request("The cat sat.", client.config()));
  EXPECT_EQ(mock.auth_headers().at(0), "Bearer " + kSecret);
}

TEST(FetchLogprobs, EmptyTextFailsBeforeAnyRequest) {
  MockCompletions mock(echo_handler());
  const CompletionsClient client(config_for(mock));
  EXPECT_EQ(fetch_error(client, ""), ErrorCode::InvalidInput);
  EXPECT_EQ(mock.requests(), 0u);
}

TEST(FetchLogprobs, RetriesRateLimitThenSucceeds) {
  std::atomic<int> calls{0};
  MockCompletions mock([&](const json& body, httplib::Response& res) {
    if (calls++ < 2) {
      res.status = 429;
      res.set_content("slow down", "text/plain");
      return;
    }
    res.set_content(echo_payload(body["prompt"], 3).dump(), "application/json");
  });
  const CompletionsClient client(config_for(mock));
  const auto s = client.fetch_logprobs("one two three four");
  EXPECT_EQ(s.size(), 3u);
  const auto m = client.metrics();
  EXPECT_EQ(m.retries, 2u);
  EXPECT_EQ(m.requests, 3u);
  EXPECT_EQ(m.backoff_delays_ms, (std::vector<std::uint64_t>{5, 10}));
}

TEST(FetchLogprobs, RetriesAreBounded) {
  MockCompletions mock([](const json&, httplib::Response& res) { res.status = 429; });
  auto cfg = config_for(mock);
  cfg.max_retries = 2;
  const CompletionsClient client(cfg);
  EXPECT_EQ(fetch_error(client, "a b c"), ErrorCode::RateLimited);
  EXPECT_EQ(mock.requests(), 3u);
  EXPECT_EQ(client.metrics().backoff_delays_ms, (std::vector<std::uint64_t>{5, 10}));
}

TEST(FetchLogprobs, ServerErrorsRetriedThenSurfaced) {
  MockCompletions mock([](const json&, httplib::Response& res) {
    res.status = 503;
    res.set_content("echo " + kSecret, "text/plain");
  });
  auto cfg = config_for(mock);
  cfg.max_retries = 1;
  const CompletionsClient client(cfg);
  try {
    client.fetch_logprobs("a b c");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::HttpError);
    EXPECT_EQ(e.status.value_or(0), 503);
    EXPECT_EQ(std::string(e.what()).find(kSecret), std::string::npos);
  }
  EXPECT_EQ(mock.requests(), 2u);
}

TEST(FetchLogprobs, ClientErrorsNotRetried) {
  MockCompletions mock([](const json&, httplib::Response& res) { res.status = 400; });
  const CompletionsClient client(config_for(mock));
  EXPECT_EQ(fetch_error(client, "a b c"), ErrorCode::HttpError);
  EXPECT_EQ(mock.requests(), 1u);
}

TEST(FetchLogprobs, AuthErrors) {
  MockCompletions mock([](const json&, httplib::Response& res) { res.status = 401; });
  const CompletionsClient client(config_for(mock));
  EXPECT_EQ(fetch_error(client, "a b c"), ErrorCode::AuthError);
  EXPECT_EQ(mock.requests(), 1u);
}

TEST(FetchLogprobs, SchemaErrorSurfaced) {
  MockCompletions mock([](const json&, httplib::Response& res) {
    res.set_content(R"({"choices":[{"text":"x"}]})", "application/json");
  });
  const CompletionsClient client(config_for(mock));
  EXPECT_EQ(fetch_error(client, "a b c"), ErrorCode::SchemaError);
  MockCompletions garbage([](const json&, httplib::Response& res) { res.set_content("not json", "text/plain"); });
  const CompletionsClient client2(config_for(garbage));
  EXPECT_EQ(fetch_error(client2, "a b c"), ErrorCode::SchemaError);
}

TEST(FetchLogprobs, Timeout) {
  MockCompletions mock(echo_handler(), std::chrono::milliseconds(1500));
  auto cfg = config_for(mock);
  cfg.timeout_s = 0.3;
  cfg.max_retries = 0;
  const CompletionsClient client(cfg);
  EXPECT_EQ(fetch_error(client, "a b c"), ErrorCode::TimeoutError);
}

TEST(FetchLogprobs, UnreachableHostIsHttpError) {
  EndpointConfig cfg;
  cfg.base_url = "http://127.0.0.1:1/v1";
  cfg.timeout_s = 2.0;
  cfg.model = "m";
  cfg.max_retries = 0;
  const CompletionsClient client(cfg);
  EXPECT_EQ(fetch_error(client, "a b"), ErrorCode::HttpError);
}

TEST(FetchCorpus, ConcurrencyCeilingAndOrder) {
  MockCompletions mock(echo_handler(), std::chrono::milliseconds(60));
  const CompletionsClient client(config_for(mock));
  std::vector<TextItem> items;
  for (int i = 0; i < 5; ++i) items.push_back({"t" + std::to_string(i), Label::Human, "w0 w" + std::to_string(i) + " tail"});
  const auto report = client.fetch_corpus(items);
  EXPECT_LE(mock.max_in_flight(), 2u);
  EXPECT_LE(client.metrics().max_in_flight, 2u);
  EXPECT_EQ(mock.max_in_flight(), 2u);
  ASSERT_EQ(report.records.size(), 5u);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(report.records[i].id, "t" + std::to_string(i));
  EXPECT_TRUE(report.failures.empty());
}

TEST(FetchCorpus, PermanentFailureIsIsolated) {
  MockCompletions mock([](const json& body, httplib::Response& res) {
    const auto prompt = body["prompt"].get<std::string>();
    if (prompt.find("poison") != std::string::npos) {
      res.status = 500;
      return;
    }
    res.set_content(echo_payload(prompt, 3).dump(), "application/json");
  });
  auto cfg = config_for(mock);
  cfg.max_retries = 1;
  const CompletionsClient client(cfg);
  const std::vector<TextItem> items{{"a", Label::Human, "x y z"},
                                    {"b", Label::Machine, "poison y z"},
                                    {"c", Label::Human, "x y"},
                                    {"d", Label::Machine, "p q r s"},
                                    {"e", Label::Human, "u v"}};
  const auto report = client.fetch_corpus(items);
  ASSERT_EQ(report.records.size(), 4u);
  ASSERT_EQ(report.failures.size(), 1u);
  EXPECT_EQ(report.failures[0].id, "b");
  EXPECT_EQ(report.failures[0].error, "HttpError");
  EXPECT_EQ(report.records[1].id, "c");
}

TEST(FetchCorpus, DeterministicAndCredentialFree) {
  MockCompletions mock(echo_handler());
  const CompletionsClient client(config_for(mock));
  const std::vector<TextItem> items{{"a", Label::Human, "the quick brown fox"}, {"b", Label::Machine, "jumps over it"}};
  const auto first = client.fetch_corpus(items);
  const auto second = client.fetch_corpus(items);
  EXPECT_EQ(first.records, second.records);
  std::ostringstream out;
  write_corpus(first.records, out);
  EXPECT_EQ(out.str().find(kSecret), std::string::npos);
  EXPECT_EQ(first.records[0].extra["provenance"], "api:mock-model:top_k=3");
  EXPECT_EQ(first.records[0].source_model, "mock-model");
  EXPECT_EQ(first.records[0].logprobs.size(), 3u);
  EXPECT_EQ(first.records[0].ranks, (std::vector<std::uint64_t>{1, 1, 1}));
}

TEST(FetchCorpus, DuplicateIdsRejected) {
  MockCompletions mock(echo_handler());
  const CompletionsClient client(config_for(mock));
  const std::vector<TextItem> items{{"a", Label::Human, "x y"}, {"a", Label::Human, "x y"}};
  EXPECT_THROW(client.fetch_corpus(items), Error);
}
