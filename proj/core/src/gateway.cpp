#include "judgekit/gateway.hpp"

#include <algorithm>
#include <array>

#include <nlohmann/json.hpp>

#include "judgekit/jsonl.hpp"
#include "judgekit/rng.hpp"

namespace judgekit::llm {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Requests

std::string to_string(ChatRole role) {
  switch (role) {
    case ChatRole::system: return "system";
    case ChatRole::user: return "user";
    case ChatRole::assistant: return "assistant";
  }
  throw ValidationError("bad ChatRole value");
}

ChatRole chat_role_from_string(std::string_view s) {
  if (s == "system") return ChatRole::system;
  if (s == "user") return ChatRole::user;
  if (s == "assistant") return ChatRole::assistant;
  throw ValidationError("unknown chat role: " + std::string(s));
}

ChatRequest ChatRequest::simple(std::string model, std::string user_text,
                                SamplingParams sampling) {
  ChatRequest request{std::move(model),
                      {ChatMessage{ChatRole::user, std::move(user_text)}},
                      sampling};
  validate(request);
  return request;
}

ChatRequest ChatRequest::with_system(std::string model, std::string system_text,
                                     std::string user_text,
                                     SamplingParams sampling) {
  ChatRequest request{std::move(model),
                      {ChatMessage{ChatRole::system, std::move(system_text)},
                       ChatMessage{ChatRole::user, std::move(user_text)}},
                      sampling};
  validate(request);
  return request;
}

void validate(const ChatRequest& request) {
  if (request.messages.empty()) {
    throw ValidationError("chat request has no messages");
  }
  for (std::size_t i = 0; i < request.messages.size(); ++i) {
    if (request.messages[i].role == ChatRole::system && i != 0) {
      throw ValidationError("system message must be first and unique");
    }
  }
  validate(request.sampling);
}

std::string to_string(FinishReason reason) {
  switch (reason) {
    case FinishReason::stop: return "stop";
    case FinishReason::length: return "length";
    case FinishReason::error: return "error";
  }
  throw ValidationError("bad FinishReason value");
}

FinishReason finish_reason_from_string(std::string_view s) {
  if (s == "stop") return FinishReason::stop;
  if (s == "length") return FinishReason::length;
  return FinishReason::error;
}

std::string request_fingerprint(const ChatRequest& request, int sample_index) {
  json canonical = json::array();
  canonical.push_back(request.model);
  json messages = json::array();
  for (const auto& m : request.messages) {
    messages.push_back({to_string(m.role), m.content});
  }
  canonical.push_back(std::move(messages));
  canonical.push_back(request.sampling.temperature);
  canonical.push_back(request.sampling.top_p);
  canonical.push_back(sample_index);
  return rng::to_hex(rng::fnv1a64(canonical.dump()));
}

std::uint64_t prompt_hash(const ChatRequest& request) {
  std::uint64_t h = rng::fnv1a64("prompt");
  for (const auto& m : request.messages) {
    h = rng::mix(h, rng::fnv1a64(to_string(m.role)));
    h = rng::mix(h, rng::fnv1a64(m.content));
  }
  return h;
}

// ---------------------------------------------------------------------------
// Mock backend

void MockBackend::enqueue(std::string reply) {
  std::lock_guard lock(mutex_);
  script_.push_back(std::move(reply));
}

std::vector<Completion> MockBackend::complete(
    const ChatRequest& request, const std::vector<int>& sample_indices) {
  calls_.fetch_add(1);
  std::vector<Completion> out;
  out.reserve(sample_indices.size());
  for (int index : sample_indices) {
    std::string text;
    {
      std::lock_guard lock(mutex_);
      if (!script_.empty()) {
        text = std::move(script_.front());
        script_.pop_front();
      } else if (handler_) {
        text = handler_(request, index);
      } else {
        throw GatewayError("mock backend: script exhausted and no handler set");
      }
    }
    out.push_back(Completion{std::move(text), FinishReason::stop,
                             request_fingerprint(request, index)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Judge simulation

namespace {

constexpr std::array<const char*, 4> kJudgeOpeners = {
    "After carefully comparing the two responses, I find that Assistant %s "
    "follows the user's request more faithfully and explains its answer "
    "more clearly.",
    "Both assistants address the question, but Assistant %s is more "
    "accurate and better organized, while the other response drifts from "
    "what was actually asked.",
    "Comparing helpfulness, relevance, and depth, Assistant %s gives the "
    "stronger answer; the alternative is vaguer and less complete.",
    "Assistant %s directly answers the question with correct details, "
    "whereas the other answer is weaker on relevance and accuracy.",
};

std::string format_opener(const char* pattern, char verdict_letter) {
  std::string out;
  for (const char* p = pattern; *p; ++p) {
    if (*p == '%' && *(p + 1) == 's') {
      out += verdict_letter;
      ++p;
    } else {
      out += *p;
    }
  }
  return out;
}

}  // namespace

Completion simulate_judge(Verdict gold, double accuracy_p, std::uint64_t seed) {
  rng::SplitMix64 gen(seed);
  const bool correct = gen.next_double() < accuracy_p;
  const Verdict verdict = correct ? gold : opposite(gold);

  const char* pattern =
      kJudgeOpeners[static_cast<std::size_t>(gen.next_below(kJudgeOpeners.size()))];
  std::string text = format_opener(pattern, letter(verdict));
  text += "\n\nFinal verdict: [[";
  text += letter(verdict);
  text += "]]";

  const std::uint64_t fp =
      rng::mix(rng::fnv1a64("simulate_judge"),
               rng::mix(static_cast<std::uint64_t>(letter(gold)),
                        rng::mix(static_cast<std::uint64_t>(accuracy_p * 1e9), seed)));
  return Completion{std::move(text), FinishReason::stop, rng::to_hex(fp)};
}

std::string unparseable_judgment(std::uint64_t seed) {
  static const std::array<const char*, 3> texts = {
      "Both responses seem adequate in different ways, and it is hard to "
      "single out a winner here.",
      "The two answers each have strengths; I would want more context "
      "before committing to either.",
      "Honestly the responses are comparable in quality overall.",
  };
  rng::SplitMix64 gen(seed);
  return texts[static_cast<std::size_t>(gen.next_below(texts.size()))];
}

MockBackend::Handler simulated_judge_handler(
    std::unordered_map<std::uint64_t, Verdict> gold_by_prompt,
    double accuracy_p, std::uint64_t seed, double unparseable_rate) {
  return [gold_by_prompt = std::move(gold_by_prompt), accuracy_p, seed,
          unparseable_rate](const ChatRequest& request, int sample_index) {
    const std::uint64_t h = prompt_hash(request);
    auto it = gold_by_prompt.find(h);
    if (it == gold_by_prompt.end()) {
      throw GatewayError("mock judge: no gold verdict registered for prompt");
    }
    const std::uint64_t stream =
        rng::mix(seed, rng::mix(rng::mix(h, rng::fnv1a64(request.model)),
                                static_cast<std::uint64_t>(sample_index)));
    rng::SplitMix64 gen(stream);
    if (unparseable_rate > 0.0 && gen.next_double() < unparseable_rate) {
      return unparseable_judgment(gen.next());
    }
    return simulate_judge(it->second, accuracy_p, gen.next()).text;
  };
}

MockBackend::Handler canned_generator_handler(std::uint64_t seed) {
  return [seed](const ChatRequest& request, int sample_index) {
    const std::string& prompt = request.messages.back().content;
    const std::uint64_t h =
        rng::mix(seed, rng::mix(prompt_hash(request),
                                static_cast<std::uint64_t>(sample_index)));
    const std::string tag = rng::to_hex(h).substr(0, 8);

    if (prompt.find("categorize the instruction above") != std::string::npos) {
      rng::SplitMix64 gen(h);
      const auto& names = category_names();
      const auto category =
          names[static_cast<std::size_t>(gen.next_below(names.size()))];
      const int complexity = static_cast<int>(gen.next_below(10)) + 1;
      const char length = static_cast<char>('a' + gen.next_below(5));
      std::string reply = "Category: ";
      reply += category;
      reply += "\nComplexity: " + std::to_string(complexity);
      reply += "\nLength: (";
      reply += length;
      reply += ")";
      return reply;
    }
    if (prompt.find("generate a modified instruction") != std::string::npos) {
      return "User Question Modified\n"
             "Please answer a closely related but different question (" +
             tag +
             ").\n\n"
             "The start of Assistant's answer to the modified instruction\n"
             "A thorough answer to the modified question, which misses the "
             "original request (" +
             tag +
             ").\n"
             "The end of Assistant's answer to the modified instruction";
    }
    if (prompt.find("make it worse") != std::string::npos) {
      return "I will rewrite the answer to be less helpful and less "
             "coherent.\n\n"
             "[The start of a rewritten worse answer]\n"
             "A vague, partially incorrect version of the answer (" +
             tag +
             ").\n"
             "[The end of a rewritten worse answer]";
    }
    return "A direct, correct answer to the request (" + tag + ").";
  };
}

// ---------------------------------------------------------------------------
// Gateway

Gateway::Gateway(std::shared_ptr<Backend> backend, GatewayConfig config)
    : backend_(std::move(backend)), config_(std::move(config)) {
  if (!backend_) {
    throw ConfigError("gateway requires a backend");
  }
  if (config_.parallelism < 1) {
    throw ConfigError("gateway parallelism must be >= 1");
  }
  if (config_.cache_path.empty()) {
    return;
  }
  const std::filesystem::path path(config_.cache_path);
  if (std::filesystem::exists(path)) {
    // Lenient load: a crash can leave a torn final line behind; skipping
    // it just re-fetches that one completion on resume.
    std::ifstream in(path, std::ios::binary);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      try {
        auto j = nlohmann::json::parse(line);
        Completion completion{
            j.at("text").get<std::string>(),
            finish_reason_from_string(j.at("finish_reason").get<std::string>()),
            j.at("fingerprint").get<std::string>()};
        cache_[completion.request_fingerprint] = std::move(completion);
      } catch (const nlohmann::json::exception&) {
        continue;
      }
    }
  } else if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  cache_out_.open(path, std::ios::app | std::ios::binary);
  if (!cache_out_) {
    throw IoError("cannot open cache file " + config_.cache_path);
  }
}

std::optional<Completion> Gateway::cached(const std::string& fingerprint) const {
  std::lock_guard lock(mutex_);
  auto it = cache_.find(fingerprint);
  if (it == cache_.end()) return std::nullopt;
  return it->second;
}

void Gateway::store(const Completion& completion) {
  std::lock_guard lock(mutex_);
  auto [it, inserted] = cache_.emplace(completion.request_fingerprint, completion);
  if (!inserted) {
    return;  // first write wins; replay stays byte-identical
  }
  if (cache_out_.is_open()) {
    json j{{"fingerprint", completion.request_fingerprint},
           {"text", completion.text},
           {"finish_reason", to_string(completion.finish_reason)}};
    cache_out_ << j.dump() << '\n';
    cache_out_.flush();
  }
}

std::size_t Gateway::cache_size() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

std::vector<Completion> Gateway::complete(const ChatRequest& request) {
  validate(request);
  const int n = request.sampling.n;

  std::vector<std::string> fingerprints;
  fingerprints.reserve(static_cast<std::size_t>(n));
  std::vector<int> missing;
  for (int i = 0; i < n; ++i) {
    fingerprints.push_back(request_fingerprint(request, i));
    if (!cached(fingerprints.back())) {
      missing.push_back(i);
    }
  }

  if (!missing.empty()) {
    auto fresh = backend_->complete(request, missing);
    if (fresh.size() != missing.size()) {
      throw GatewayError("backend returned " + std::to_string(fresh.size()) +
                         " completions for " + std::to_string(missing.size()) +
                         " requested samples");
    }
    for (std::size_t k = 0; k < missing.size(); ++k) {
      fresh[k].request_fingerprint =
          fingerprints[static_cast<std::size_t>(missing[k])];
      store(fresh[k]);
    }
  }

  std::vector<Completion> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto hit = cached(fingerprints[static_cast<std::size_t>(i)]);
    if (!hit) {
      throw GatewayError("completion missing after backend call");
    }
    out.push_back(std::move(*hit));
  }
  return out;
}

Completion Gateway::complete_one(const ChatRequest& request, int sample_index) {
  validate(request);
  const std::string fingerprint = request_fingerprint(request, sample_index);
  if (auto hit = cached(fingerprint)) {
    return *hit;
  }
  auto fresh = backend_->complete(request, {sample_index});
  if (fresh.size() != 1) {
    throw GatewayError("backend returned " + std::to_string(fresh.size()) +
                       " completions for a single sample");
  }
  fresh[0].request_fingerprint = fingerprint;
  store(fresh[0]);
  return fresh[0];
}

}  // namespace judgekit::llm
