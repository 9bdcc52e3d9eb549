#include "ragcap/llm_client.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <random>

#include "ragcap/retrieval.hpp"
#include "stub_server.hpp"
#include "test_support.hpp"

namespace ragcap {
namespace {

using testing::error_code_of;
using testing::StubServer;
using namespace std::chrono_literals;

BackendConfig fast_config(const std::string& endpoint) {
  BackendConfig cfg;
  cfg.endpoint = endpoint;
  cfg.timeout = 2000ms;
  cfg.max_retries = 3;
  cfg.initial_backoff = 1ms;
  cfg.token_env = "RAGCAP_TEST_TOKEN";
  return cfg;
}

GenerationRequest request(const std::string& id = "req-1") {
  GenerationRequest req;
  req.prompt_text = "Describe the audio you hear";
  req.request_id = id;
  req.max_tokens = 16;
  return req;
}

TEST(WireFormat, RequestBodyFieldsAndOptionalSoftPrefix) {
  auto req = request("abc");
  req.soft_prefix = std::vector<float>{0.6f, 0.8f};
  EXPECT_EQ(encode_request_body(req, false),
            R"({"request_id":"abc","prompt":"Describe the audio you hear","max_tokens":16})");
  EXPECT_EQ(encode_request_body(req, true),
            R"({"request_id":"abc","prompt":"Describe the audio you hear","max_tokens":16,"soft_prefix":[0.6,0.8]})");
}

TEST(WireFormat, ResponseValidation) {
  EXPECT_EQ(decode_response_body(R"({"text":"a dog barks"})"), "a dog barks");
  for (const char* bad : {"not json", "[]", R"({"txt":"x"})", R"({"text":3})", R"({"text":""})"}) {
    EXPECT_EQ(error_code_of([&] { decode_response_body(bad); }), ErrorCode::MalformedResponse)
        << bad;
  }
}

TEST(Generate, EchoesCannedCaption) {
  StubServer server([](int, const nlohmann::json&) { return StubServer::text("birds chirp"); });
  GenerationStats stats;
  EXPECT_EQ(generate(fast_config(server.endpoint()), request(), &stats), "birds chirp");
  EXPECT_EQ(stats.attempts, 1u);
  const auto bodies = server.bodies();
  ASSERT_EQ(bodies.size(), 1u);
  const auto sent = nlohmann::json::parse(bodies[0]);
  EXPECT_EQ(sent["request_id"], "req-1");
  EXPECT_EQ(sent["prompt"], "Describe the audio you hear");
  EXPECT_EQ(sent["max_tokens"], 16);
}

TEST(Generate, MalformedBodyIsNotRetried) {
  StubServer server([](int, const nlohmann::json&) {
    return StubServer::Reply{200, "{oops", {}};
  });
  EXPECT_EQ(error_code_of([&] { generate(fast_config(server.endpoint()), request()); }),
            ErrorCode::MalformedResponse);
  EXPECT_EQ(server.requests(), 1);
}

TEST(Generate, RetriesTransientFailuresWithSameRequestId) {
  StubServer server([](int n, const nlohmann::json&) {
    if (n <= 2) return StubServer::Reply{503, "busy", {}};
    return StubServer::text("rain on a roof");
  });
  GenerationStats stats;
  EXPECT_EQ(generate(fast_config(server.endpoint()), request("same"), &stats), "rain on a roof");
  EXPECT_EQ(stats.attempts, 3u);
  EXPECT_EQ(stats.attempt_log.size(), 3u);
  for (const auto& body : server.bodies()) {
    EXPECT_EQ(nlohmann::json::parse(body)["request_id"], "same");
  }
}

TEST(Generate, PersistentFailureExhaustsRetries) {
  StubServer server([](int, const nlohmann::json&) { return StubServer::Reply{500, "", {}}; });
  auto cfg = fast_config(server.endpoint());
  cfg.max_retries = 2;
  GenerationStats stats;
  EXPECT_EQ(error_code_of([&] { generate(cfg, request(), &stats); }),
            ErrorCode::BackendUnavailable);
  EXPECT_EQ(server.requests(), 3);
  EXPECT_EQ(stats.attempts, 3u);
}

TEST(Generate, ClientErrorsFailFast) {
  StubServer server([](int, const nlohmann::json&) { return StubServer::Reply{400, "", {}}; });
  EXPECT_EQ(error_code_of([&] { generate(fast_config(server.endpoint()), request()); }),
            ErrorCode::BackendUnavailable);
  EXPECT_EQ(server.requests(), 1);
}

TEST(Generate, SlowServerTimesOut) {
  StubServer server([](int, const nlohmann::json&) {
    auto reply = StubServer::text("late");
    reply.delay = 600ms;
    return reply;
  });
  auto cfg = fast_config(server.endpoint());
  cfg.timeout = 150ms;
  cfg.max_retries = 1;
  EXPECT_EQ(error_code_of([&] { generate(cfg, request()); }), ErrorCode::Timeout);
}

TEST(Generate, UnreachableEndpointIsUnavailable) {
  auto cfg = fast_config("http://127.0.0.1:1/v1/generate");
  cfg.max_retries = 1;
  EXPECT_EQ(error_code_of([&] { generate(cfg, request()); }), ErrorCode::BackendUnavailable);
}

TEST(Generate, BearerTokenFromEnvironment) {
  StubServer server([](int, const nlohmann::json&) { return StubServer::text("ok"); });
  ::setenv("RAGCAP_TEST_TOKEN", "sekrit", 1);
  GenerationStats stats;
  generate(fast_config(server.endpoint()), request(), &stats);
  ::unsetenv("RAGCAP_TEST_TOKEN");
  generate(fast_config(server.endpoint()), request());
  const auto auth = server.authorization_headers();
  ASSERT_EQ(auth.size(), 2u);
  EXPECT_EQ(auth[0], "Bearer sekrit");
  EXPECT_EQ(auth[1], "");
  for (const auto& line : stats.attempt_log) EXPECT_EQ(line.find("sekrit"), std::string::npos);
}

TEST(Generate, ConfigValidation) {
  auto cfg = fast_config("ftp://host/x");
  EXPECT_EQ(error_code_of([&] { cfg.validate(); }), ErrorCode::InvalidConfig);
  cfg = fast_config("http://127.0.0.1:9/x");
  cfg.timeout = 0ms;
  EXPECT_EQ(error_code_of([&] { cfg.validate(); }), ErrorCode::InvalidConfig);
  auto req = request();
  req.prompt_text.clear();
  EXPECT_EQ(error_code_of([&] { req.validate(); }), ErrorCode::InvalidConfig);
}

TEST(HttpBackendTest, RespectsMaxInFlight) {
  std::atomic<int> active{0};
  std::atomic<int> peak{0};
  StubServer server([&](int, const nlohmann::json& body) {
    const int now = ++active;
    int prev = peak.load();
    while (now > prev && !peak.compare_exchange_weak(prev, now)) {
    }
    std::this_thread::sleep_for(30ms);
    --active;
    return StubServer::text("item " + body["request_id"].get<std::string>());
  });
  auto cfg = fast_config(server.endpoint());
  cfg.max_in_flight = 2;
  HttpBackend backend(cfg);
  const PromptPayload payload;
  std::vector<std::jthread> threads;
  for (int i = 0; i < 6; ++i) {
    threads.emplace_back([&, i] {
      auto req = request("r" + std::to_string(i));
      const GenerationContext ctx{req, payload, {}, nullptr, nullptr};
      EXPECT_EQ(backend.generate(ctx), "item r" + std::to_string(i));
    });
  }
  threads.clear();
  EXPECT_LE(peak.load(), 2);
  EXPECT_EQ(backend.total_attempts(), 6u);
}

TEST(Mock, ExactMatchFallbackAndNoSource) {
  const auto store = testing::fixture_store("a");
  const auto idx = *store.find("c07");
  PromptPayload payload;
  EXPECT_EQ(mock_generate(payload, store, store.embedding(idx)), store.text(idx));

  payload.similar_captions = {"x", "y"};
  const std::vector<float> q(store.dim(), 1.0f);
  EXPECT_EQ(mock_generate(payload, CaptionStore(store.dim()), q), "x");
  payload.similar_captions.clear();
  EXPECT_EQ(error_code_of([&] { mock_generate(payload, CaptionStore(store.dim()), q); }),
            ErrorCode::NoSource);
}

TEST(Mock, IsTheNearestNeighbourDecoder) {
  const auto store = testing::fixture_store("a");
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const auto q = testing::random_vector(rng, store.dim());
    const auto oracle = testing::oracle_sorted(q, store);
    EXPECT_EQ(mock_generate({}, store, q), store.text(oracle[0].index));
    EXPECT_EQ(mock_generate({}, store, q), store.text(retrieve_topk(q, store, 1)[0].index));
  }
}

TEST(TranscriptTest, RecordThenReplayWithoutNetwork) {
  testing::TempDir dir("transcript");
  Transcript recorded;
  {
    StubServer server([](int, const nlohmann::json& body) {
      return StubServer::text("caption for " + body["request_id"].get<std::string>());
    });
    HttpBackend http(fast_config(server.endpoint()));
    RecordingBackend recorder(http, recorded);
    const PromptPayload payload;
    for (const char* id : {"b", "a", "c"}) {
      auto req = request(id);
      recorder.generate(GenerationContext{req, payload, {}, nullptr, nullptr});
    }
  }
  recorded.save(dir / "t.jsonl");
  const auto loaded = Transcript::load(dir / "t.jsonl");
  EXPECT_EQ(loaded.records(), recorded.records());
  EXPECT_EQ(loaded.records().front().request_id, "a");

  ReplayBackend replay(loaded);
  const PromptPayload payload;
  auto req = request("c");
  EXPECT_EQ(replay.generate(GenerationContext{req, payload, {}, nullptr, nullptr}),
            "caption for c");
  auto missing = request("zzz");
  EXPECT_EQ(error_code_of([&] {
              replay.generate(GenerationContext{missing, payload, {}, nullptr, nullptr});
            }),
            ErrorCode::BackendUnavailable);
  auto changed = request("a");
  changed.prompt_text = "something else";
  EXPECT_EQ(error_code_of([&] {
              replay.generate(GenerationContext{changed, payload, {}, nullptr, nullptr});
            }),
            ErrorCode::BackendUnavailable);
}

}  // namespace
}  // namespace ragcap
