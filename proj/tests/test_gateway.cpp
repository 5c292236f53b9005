#include "judgekit/gateway.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <set>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "judgekit/rng.hpp"
#include "test_support.hpp"

namespace judgekit::llm {
namespace {

using testing::TempDir;

ChatRequest request_with_n(int n) {
  return ChatRequest::simple("test-model", "say something",
                             make_sampling(0.7, 0.9, n));
}

TEST(MockBackend, ScriptedEcho) {
  auto backend = std::make_shared<MockBackend>();
  backend->enqueue("hello");
  Gateway gateway(backend);

  auto completions = gateway.complete(request_with_n(1));
  ASSERT_EQ(completions.size(), 1u);
  EXPECT_EQ(completions[0].text, "hello");
  EXPECT_EQ(completions[0].finish_reason, FinishReason::stop);
}

TEST(MockBackend, ThrowsWhenScriptExhaustedWithoutHandler) {
  auto backend = std::make_shared<MockBackend>();
  Gateway gateway(backend);
  EXPECT_THROW(gateway.complete(request_with_n(1)), GatewayError);
}

TEST(Gateway, CacheReplayIsByteIdenticalWithoutBackendCall) {
  TempDir dir;
  auto backend = std::make_shared<MockBackend>(
      [](const ChatRequest&, int index) {
        return "reply " + std::to_string(index);
      });
  GatewayConfig config{dir.file("cache.jsonl").string(), 4};

  std::vector<Completion> first;
  {
    Gateway gateway(backend, config);
    first = gateway.complete(request_with_n(3));
    EXPECT_EQ(backend->calls(), 1);
    auto second = gateway.complete(request_with_n(3));
    EXPECT_EQ(backend->calls(), 1);  // no new network call
    EXPECT_EQ(second, first);
  }

  // A fresh gateway over the same cache file replays identically.
  Gateway reloaded(backend, config);
  auto replay = reloaded.complete(request_with_n(3));
  EXPECT_EQ(backend->calls(), 1);
  EXPECT_EQ(replay, first);
}

TEST(Gateway, TornCacheLineIsSkippedOnResume) {
  TempDir dir;
  const auto cache = dir.file("cache.jsonl");
  auto backend = std::make_shared<MockBackend>(
      [](const ChatRequest&, int index) { return "v" + std::to_string(index); });
  GatewayConfig config{cache.string(), 2};
  {
    Gateway gateway(backend, config);
    gateway.complete(request_with_n(2));
  }
  // simulate a crash mid-append
  {
    std::ofstream out(cache, std::ios::app | std::ios::binary);
    out << "{\"fingerprint\":\"deadbeef\",\"text\":\"trunca";
  }
  Gateway resumed(backend, config);
  EXPECT_EQ(resumed.cache_size(), 2u);
  auto replay = resumed.complete(request_with_n(2));
  EXPECT_EQ(replay[0].text, "v0");
  EXPECT_EQ(backend->calls(), 1);
}

TEST(Gateway, FifteenSamplesHaveDistinctFingerprints) {
  auto backend = std::make_shared<MockBackend>(
      [](const ChatRequest&, int index) { return std::to_string(index); });
  Gateway gateway(backend);

  auto completions = gateway.complete(request_with_n(15));
  ASSERT_EQ(completions.size(), 15u);
  std::set<std::string> fingerprints;
  for (const auto& c : completions) {
    fingerprints.insert(c.request_fingerprint);
  }
  EXPECT_EQ(fingerprints.size(), 15u);
}

TEST(Fingerprint, ExcludesSampleCountSoBatchingModesCacheAlike) {
  EXPECT_EQ(request_fingerprint(request_with_n(15), 3),
            request_fingerprint(request_with_n(1), 3));
  EXPECT_NE(request_fingerprint(request_with_n(1), 0),
            request_fingerprint(request_with_n(1), 1));

  auto other_model = request_with_n(1);
  other_model.model = "other";
  EXPECT_NE(request_fingerprint(request_with_n(1), 0),
            request_fingerprint(other_model, 0));
}

TEST(Gateway, CompleteOneAtHigherIndexDrawsFreshText) {
  auto backend = std::make_shared<MockBackend>(
      [](const ChatRequest&, int index) { return "v" + std::to_string(index); });
  Gateway gateway(backend);
  auto first = gateway.complete_one(request_with_n(1), 0);
  auto retry = gateway.complete_one(request_with_n(1), 1);
  EXPECT_NE(first.text, retry.text);
  EXPECT_NE(first.request_fingerprint, retry.request_fingerprint);
}

TEST(ChatRequest, SystemMessageMustBeFirstAndUnique) {
  auto ok = ChatRequest::with_system("m", "sys", "hi", make_sampling(0.0, 1.0, 1));
  EXPECT_NO_THROW(validate(ok));

  ChatRequest bad = ok;
  bad.messages.push_back(ChatMessage{ChatRole::system, "another"});
  EXPECT_THROW(validate(bad), ValidationError);

  ChatRequest empty{"m", {}, make_sampling(0.0, 1.0, 1)};
  EXPECT_THROW(validate(empty), ValidationError);
}

TEST(SimulateJudge, CertaintyCasesAndMarkerPlacement) {
  for (std::uint64_t seed = 0; seed < 32; ++seed) {
    auto always = simulate_judge(Verdict::A, 1.0, seed);
    EXPECT_TRUE(always.text.ends_with("[[A]]")) << always.text;
    auto never = simulate_judge(Verdict::A, 0.0, seed);
    EXPECT_TRUE(never.text.ends_with("[[B]]")) << never.text;
  }
}

TEST(SimulateJudge, DeterministicGivenSeed) {
  auto a = simulate_judge(Verdict::B, 0.7, 42);
  auto b = simulate_judge(Verdict::B, 0.7, 42);
  EXPECT_EQ(a, b);
}

TEST(SimulateJudge, LawOfLargeNumbersAtSeventyPercent) {
  int correct = 0;
  const int trials = 10000;
  for (int i = 0; i < trials; ++i) {
    auto completion =
        simulate_judge(Verdict::A, 0.7, static_cast<std::uint64_t>(i));
    if (completion.text.ends_with("[[A]]")) ++correct;
  }
  const double fraction = static_cast<double>(correct) / trials;
  EXPECT_NEAR(fraction, 0.7, 0.02);
}

TEST(SimulatedJudgeHandler, ResolvesGoldByPromptAndRejectsUnknown) {
  auto known = ChatRequest::simple("m", "known prompt", make_sampling(0.7, 0.9, 1));
  std::unordered_map<std::uint64_t, Verdict> gold{
      {prompt_hash(known), Verdict::B}};
  auto handler = simulated_judge_handler(gold, 1.0, 0);
  EXPECT_TRUE(handler(known, 0).ends_with("[[B]]"));

  auto unknown = ChatRequest::simple("m", "other", make_sampling(0.7, 0.9, 1));
  EXPECT_THROW(handler(unknown, 0), GatewayError);
}

TEST(SimulatedJudgeHandler, UnparseableRateProducesMarkerFreeText) {
  auto request = ChatRequest::simple("m", "p", make_sampling(0.7, 0.9, 1));
  std::unordered_map<std::uint64_t, Verdict> gold{
      {prompt_hash(request), Verdict::A}};
  auto handler = simulated_judge_handler(gold, 1.0, 0, 1.0);
  const std::string text = handler(request, 0);
  EXPECT_EQ(text.find("[[A]]"), std::string::npos);
  EXPECT_EQ(text.find("[[B]]"), std::string::npos);
}

TEST(ParallelMap, PreservesInputOrderUnderBoundedConcurrency) {
  std::vector<int> items(50);
  for (int i = 0; i < 50; ++i) items[i] = i;

  std::atomic<int> active{0};
  std::atomic<int> high_water{0};
  auto result = parallel_map(items, 4, [&](const int& value, std::size_t index) {
    const int now = ++active;
    int expected = high_water.load();
    while (now > expected && !high_water.compare_exchange_weak(expected, now)) {
    }
    std::this_thread::sleep_for(std::chrono::microseconds(200));
    --active;
    return static_cast<int>(index) * 1000 + value;
  });

  ASSERT_EQ(result.size(), 50u);
  for (int i = 0; i < 50; ++i) {
    EXPECT_EQ(result[static_cast<std::size_t>(i)], i * 1000 + i);
  }
  EXPECT_LE(high_water.load(), 4);
}

TEST(ParallelMap, MatchesSequentialRun) {
  std::vector<int> items = {5, 4, 3, 2, 1, 0, 9, 8, 7, 6};
  auto fn = [](const int& v, std::size_t) { return v * v; };
  auto sequential = parallel_map(items, 1, fn);
  auto bounded = parallel_map(items, 2, fn);
  EXPECT_EQ(bounded, sequential);
}

// ---------------------------------------------------------------------------
// Live-protocol behavior against a local server

class LocalEndpoint {
 public:
  explicit LocalEndpoint(int failures_before_success)
      : failures_(failures_before_success) {
    server_.Post("/v1/chat/completions",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   const int hit = ++hits_;
                   if (hit <= failures_) {
                     res.status = 500;
                     return;
                   }
                   const auto body = nlohmann::json::parse(req.body);
                   const int n = body.value("n", 1);
                   nlohmann::json choices = nlohmann::json::array();
                   for (int i = 0; i < n; ++i) {
                     choices.push_back(
                         {{"message", {{"content", "ok " + std::to_string(i)}}},
                          {"finish_reason", "stop"}});
                   }
                   res.set_content(nlohmann::json{{"choices", choices}}.dump(),
                                   "application/json");
                 });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~LocalEndpoint() {
    server_.stop();
    thread_.join();
  }

  std::string base_url() const {
    return "http://127.0.0.1:" + std::to_string(port_);
  }
  int hits() const { return hits_.load(); }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  int failures_ = 0;
  std::atomic<int> hits_{0};
};

HttpBackendConfig fast_config(const std::string& base_url, int attempts) {
  HttpBackendConfig config;
  config.base_url = base_url;
  config.max_attempts = attempts;
  config.initial_backoff = std::chrono::milliseconds(1);
  return config;
}

TEST(HttpBackend, RetriesTransientFailuresWithBackoff) {
  LocalEndpoint endpoint(2);
  auto backend = make_http_backend(fast_config(endpoint.base_url(), 3));
  auto completions = backend->complete(request_with_n(1), {0});
  ASSERT_EQ(completions.size(), 1u);
  EXPECT_EQ(completions[0].text, "ok 0");
  EXPECT_EQ(endpoint.hits(), 3);
}

TEST(HttpBackend, AttemptCountNeverExceedsConfiguredLimit) {
  LocalEndpoint endpoint(1000000);
  auto backend = make_http_backend(fast_config(endpoint.base_url(), 4));
  EXPECT_THROW(backend->complete(request_with_n(1), {0}), GatewayError);
  EXPECT_EQ(endpoint.hits(), 4);
}

TEST(HttpBackend, NativeMultiSampleRequestReturnsAllChoices) {
  LocalEndpoint endpoint(0);
  auto backend = make_http_backend(fast_config(endpoint.base_url(), 2));
  auto completions = backend->complete(request_with_n(3), {0, 1, 2});
  ASSERT_EQ(completions.size(), 3u);
  EXPECT_EQ(completions[2].text, "ok 2");
  EXPECT_EQ(endpoint.hits(), 1);
}

class MalformedEndpoint {
 public:
  MalformedEndpoint() {
    server_.Post("/v1/chat/completions",
                 [](const httplib::Request&, httplib::Response& res) {
                   res.set_content("not json at all", "text/plain");
                 });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MalformedEndpoint() {
    server_.stop();
    thread_.join();
  }
  std::string base_url() const {
    return "http://127.0.0.1:" + std::to_string(port_);
  }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

TEST(HttpBackend, MalformedResponseIsAnError) {
  MalformedEndpoint endpoint;
  auto backend = make_http_backend(fast_config(endpoint.base_url(), 2));
  EXPECT_THROW(backend->complete(request_with_n(1), {0}), GatewayError);
}

}  // namespace
}  // namespace judgekit::llm
