#pragma once

// Uniform client for chat-completion endpoints. One live backend speaks
// the OpenAI-compatible JSON protocol over HTTP with retries; one mock
// backend produces deterministic scripted or simulated replies so the
// whole pipeline runs offline. The Gateway layers a persistent response
// cache and bounded-concurrency helpers over either backend.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <type_traits>
#include <unordered_map>
#include <vector>

#include "judgekit/errors.hpp"
#include "judgekit/types.hpp"

namespace judgekit::llm {

// ---------------------------------------------------------------------------
// Requests and completions

enum class ChatRole { system, user, assistant };

std::string to_string(ChatRole role);
ChatRole chat_role_from_string(std::string_view s);

struct ChatMessage {
  ChatRole role = ChatRole::user;
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  SamplingParams sampling;

  static ChatRequest simple(std::string model, std::string user_text,
                            SamplingParams sampling);
  static ChatRequest with_system(std::string model, std::string system_text,
                                 std::string user_text,
                                 SamplingParams sampling);

  friend bool operator==(const ChatRequest&, const ChatRequest&) = default;
};

/// Messages must be non-empty; at most one system message, and first.
void validate(const ChatRequest& request);

enum class FinishReason { stop, length, error };

std::string to_string(FinishReason reason);
FinishReason finish_reason_from_string(std::string_view s);

struct Completion {
  std::string text;
  FinishReason finish_reason = FinishReason::stop;
  /// Stable content hash of (model, messages, temperature, top_p,
  /// sample index). Deliberately excludes n so that native multi-sample
  /// requests and sequential single-sample requests cache identically.
  std::string request_fingerprint;

  friend bool operator==(const Completion&, const Completion&) = default;
};

std::string request_fingerprint(const ChatRequest& request, int sample_index);

/// Hash of the request's message contents (model- and sampling-agnostic);
/// used by mock handlers to key per-prompt behavior.
std::uint64_t prompt_hash(const ChatRequest& request);

// ---------------------------------------------------------------------------
// Backends

class Backend {
 public:
  virtual ~Backend() = default;

  /// Produces one completion per requested sample index.
  virtual std::vector<Completion> complete(
      const ChatRequest& request, const std::vector<int>& sample_indices) = 0;

  virtual std::string name() const = 0;
};

struct HttpBackendConfig {
  std::string base_url;  // e.g. "http://localhost:8000"
  std::string path = "/v1/chat/completions";
  std::string api_key;   // empty: no Authorization header
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{200};
  double backoff_multiplier = 2.0;
  /// Ask for all samples in one request via the protocol's n parameter;
  /// when false, issue one request per sample.
  bool use_native_n = true;
  std::chrono::seconds timeout{120};
};

std::unique_ptr<Backend> make_http_backend(HttpBackendConfig config);

/// Deterministic in-process backend. Replies come from an explicit FIFO
/// script when one is queued, otherwise from the configured handler.
class MockBackend : public Backend {
 public:
  using Handler = std::function<std::string(const ChatRequest&, int sample_index)>;

  MockBackend() = default;
  explicit MockBackend(Handler handler) : handler_(std::move(handler)) {}

  void enqueue(std::string reply);
  void set_handler(Handler handler) { handler_ = std::move(handler); }

  std::vector<Completion> complete(const ChatRequest& request,
                                   const std::vector<int>& sample_indices) override;
  std::string name() const override { return "mock"; }

  /// Number of complete() invocations so far (for cache tests).
  int calls() const { return calls_.load(); }

 private:
  std::mutex mutex_;
  std::deque<std::string> script_;
  Handler handler_;
  std::atomic<int> calls_{0};
};

// ---------------------------------------------------------------------------
// Judge simulation (mock backend only)

/// Emits a plausible judgment text that ends exactly with "[[A]]" or
/// "[[B]]". The verdict equals `gold` with probability `accuracy_p`
/// under a splitmix64 stream, so results are fully deterministic given
/// (gold, accuracy_p, seed).
Completion simulate_judge(Verdict gold, double accuracy_p, std::uint64_t seed);

/// Judgment text with no verdict marker at all (format failure).
std::string unparseable_judgment(std::uint64_t seed);

/// Handler that resolves the gold verdict by prompt hash and answers via
/// simulate_judge. Distinct (model, prompt, sample index) triples draw
/// from distinct streams. `unparseable_rate` injects format failures.
MockBackend::Handler simulated_judge_handler(
    std::unordered_map<std::uint64_t, Verdict> gold_by_prompt,
    double accuracy_p, std::uint64_t seed, double unparseable_rate = 0.0);

/// Deterministic generator-side handler for offline runs: answers
/// categorization, pair-construction, and degrade prompts in their
/// expected output formats, and anything else with a plain baseline
/// reply. Replies are stable functions of (prompt, seed, sample index).
MockBackend::Handler canned_generator_handler(std::uint64_t seed);

// ---------------------------------------------------------------------------
// Gateway: cache + concurrency over a backend

struct GatewayConfig {
  /// Append-only JSONL cache; empty disables persistence (an in-memory
  /// cache is still kept).
  std::string cache_path;
  int parallelism = 8;
};

class Gateway {
 public:
  explicit Gateway(std::shared_ptr<Backend> backend, GatewayConfig config = {});

  /// Returns exactly request.sampling.n completions, in sample order.
  /// Cached samples are replayed byte-for-byte without a backend call.
  std::vector<Completion> complete(const ChatRequest& request);

  /// Single sample at an explicit index (index 0 is the first sample;
  /// retries after parse failures use higher indices to draw fresh text).
  Completion complete_one(const ChatRequest& request, int sample_index);

  int parallelism() const { return config_.parallelism; }
  Backend& backend() { return *backend_; }
  std::size_t cache_size() const;

 private:
  std::optional<Completion> cached(const std::string& fingerprint) const;
  void store(const Completion& completion);

  std::shared_ptr<Backend> backend_;
  GatewayConfig config_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, Completion> cache_;
  std::ofstream cache_out_;
};

// ---------------------------------------------------------------------------
// Bounded-parallel map, result order = input order

template <typename In, typename Fn>
auto parallel_map(const std::vector<In>& items, int max_parallel, Fn&& fn)
    -> std::vector<std::invoke_result_t<Fn&, const In&, std::size_t>> {
  using Out = std::invoke_result_t<Fn&, const In&, std::size_t>;
  std::vector<std::optional<Out>> slots(items.size());
  std::vector<std::exception_ptr> errors(items.size());
  std::atomic<std::size_t> next{0};

  const std::size_t workers = static_cast<std::size_t>(
      std::max(1, std::min<int>(max_parallel, static_cast<int>(items.size()))));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= items.size()) break;
        try {
          slots[i] = fn(items[i], i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();

  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<Out> out;
  out.reserve(items.size());
  for (auto& slot : slots) {
    out.push_back(std::move(*slot));
  }
  return out;
}

}  // namespace judgekit::llm
