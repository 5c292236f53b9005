#include "judgekit/annotation.hpp"

#include <algorithm>
#include <cctype>

#include <nlohmann/json.hpp>

#include "judgekit/rng.hpp"

namespace judgekit::annotation {

// ---------------------------------------------------------------------------
// Judge prompting

const std::string kJudgeSystemPrompt =
    "Please act as an impartial judge and evaluate the quality of the "
    "responses provided by two AI assistants to the user question "
    "displayed below. You should choose the assistant that follows the "
    "user's instructions and answers the user's question better. Your "
    "evaluation should consider factors such as the helpfulness, "
    "relevance, accuracy, depth, creativity, and level of detail of "
    "their responses. Begin your evaluation by comparing the two "
    "responses and provide a short explanation. Avoid any position "
    "biases and ensure that the order in which the responses were "
    "presented does not influence your decision. Do not allow the length "
    "of the responses to influence your evaluation. Do not favor certain "
    "names of the assistants. Be as objective as possible. After "
    "providing your explanation, output your final verdict by strictly "
    "following this format: \"[[A]]\" if assistant A is better, \"[[B]]\" "
    "if assistant B is better.";

JudgePrompt render_judge_prompt(const OrderedExample& example) {
  std::string user;
  user += "[[User Question]]\n";
  user += example.instruction.flattened_text();
  user += "\n\n[The Start of Assistant A's Answer]\n";
  user += example.response_a;
  user += "\n[The End of Assistant A's Answer]\n";
  user += "\n[The Start of Assistant B's Answer]\n";
  user += example.response_b;
  user += "\n[The End of Assistant B's Answer]";
  return JudgePrompt{kJudgeSystemPrompt, std::move(user)};
}

llm::ChatRequest judge_request(const OrderedExample& example,
                               const std::string& model,
                               const SamplingParams& sampling) {
  auto prompt = render_judge_prompt(example);
  return llm::ChatRequest::with_system(model, std::move(prompt.system),
                                       std::move(prompt.user), sampling);
}

std::optional<Verdict> extract_verdict(std::string_view raw) {
  const std::size_t last_a = raw.rfind("[[A]]");
  const std::size_t last_b = raw.rfind("[[B]]");
  if (last_a == std::string_view::npos && last_b == std::string_view::npos) {
    return std::nullopt;
  }
  if (last_a == std::string_view::npos) return Verdict::B;
  if (last_b == std::string_view::npos) return Verdict::A;
  return last_a > last_b ? Verdict::A : Verdict::B;
}

std::unordered_map<std::uint64_t, Verdict> judge_prompt_gold_map(
    const std::vector<OrderedExample>& pool, bool include_swapped) {
  // prompt_hash ignores model and sampling, so placeholders suffice here.
  const SamplingParams sampling = sampling_presets::deterministic_eval();
  std::unordered_map<std::uint64_t, Verdict> gold;
  gold.reserve(pool.size() * (include_swapped ? 2 : 1));
  for (const auto& example : pool) {
    gold[llm::prompt_hash(judge_request(example, "-", sampling))] = example.gold;
    if (include_swapped) {
      OrderedExample swapped = example;
      std::swap(swapped.response_a, swapped.response_b);
      swapped.gold = opposite(example.gold);
      gold[llm::prompt_hash(judge_request(swapped, "-", sampling))] = swapped.gold;
    }
  }
  return gold;
}

// ---------------------------------------------------------------------------
// Sampling and filtering

std::vector<JudgmentSample> sample_judgments(llm::Gateway& gateway,
                                             const OrderedExample& example,
                                             const std::string& model, int n,
                                             const SamplingParams& sampling) {
  if (n < 1) {
    throw ConfigError("judgment sample count must be >= 1");
  }
  auto request = judge_request(example, model, sampling.with_n(n));
  auto completions = gateway.complete(request);

  std::vector<JudgmentSample> samples;
  samples.reserve(completions.size());
  for (std::size_t i = 0; i < completions.size(); ++i) {
    samples.push_back(JudgmentSample{std::move(completions[i].text),
                                     std::nullopt, static_cast<int>(i)});
    samples.back().verdict = extract_verdict(samples.back().raw);
  }
  return samples;
}

std::optional<TrainingExample> rejection_filter(
    const OrderedExample& example, const std::vector<JudgmentSample>& samples,
    std::uint64_t seed, int iteration) {
  std::vector<std::size_t> survivors;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].verdict && *samples[i].verdict == example.gold) {
      survivors.push_back(i);
    }
  }
  if (survivors.empty()) {
    return std::nullopt;
  }
  rng::SplitMix64 gen(rng::mix(seed, rng::fnv1a64(example.example_id)));
  const std::size_t pick =
      survivors[static_cast<std::size_t>(gen.next_below(survivors.size()))];

  TrainingExample retained{example, samples[pick], iteration};
  validate(retained);
  return retained;
}

std::vector<TrainingExample> balance(std::vector<TrainingExample> examples,
                                     std::uint64_t seed) {
  std::vector<std::size_t> a_indices;
  std::vector<std::size_t> b_indices;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    (examples[i].ordered.gold == Verdict::A ? a_indices : b_indices).push_back(i);
  }
  const std::size_t keep = std::min(a_indices.size(), b_indices.size());
  if (keep == 0) {
    return {};
  }

  rng::SplitMix64 gen(rng::mix(seed, rng::fnv1a64("balance")));
  rng::shuffle(a_indices, gen);
  rng::shuffle(b_indices, gen);
  a_indices.resize(keep);
  b_indices.resize(keep);

  std::vector<std::size_t> kept;
  kept.reserve(2 * keep);
  kept.insert(kept.end(), a_indices.begin(), a_indices.end());
  kept.insert(kept.end(), b_indices.begin(), b_indices.end());
  rng::shuffle(kept, gen);

  std::vector<TrainingExample> out;
  out.reserve(kept.size());
  for (std::size_t i : kept) {
    out.push_back(std::move(examples[i]));
  }
  return out;
}

AnnotateResult annotate_pool(llm::Gateway& gateway,
                             const std::vector<OrderedExample>& pool,
                             const std::string& model, int n,
                             const SamplingParams& sampling, std::uint64_t seed,
                             int iteration) {
  auto retained = llm::parallel_map(
      pool, gateway.parallelism(),
      [&](const OrderedExample& example, std::size_t) {
        auto samples = sample_judgments(gateway, example, model, n, sampling);
        return rejection_filter(example, samples, seed, iteration);
      });

  AnnotateResult result;
  result.stats.total = pool.size();
  for (auto& maybe : retained) {
    if (maybe) {
      result.examples.push_back(std::move(*maybe));
    }
  }
  result.stats.retained = result.examples.size();
  result.stats.discarded = result.stats.total - result.stats.retained;
  return result;
}

// ---------------------------------------------------------------------------
// External data sources

void to_json(nlohmann::json& j, const HelpSteerScores& v) {
  j = nlohmann::json{{"helpfulness", v.helpfulness},
                     {"correctness", v.correctness},
                     {"coherence", v.coherence},
                     {"complexity", v.complexity},
                     {"verbosity", v.verbosity}};
}

void from_json(const nlohmann::json& j, HelpSteerScores& v) {
  v.helpfulness = j.at("helpfulness").get<double>();
  v.correctness = j.at("correctness").get<double>();
  v.coherence = j.at("coherence").get<double>();
  v.complexity = j.at("complexity").get<double>();
  v.verbosity = j.at("verbosity").get<double>();
}

double aggregate_score(const HelpSteerScores& scores,
                       const std::array<double, 5>& weights) {
  return weights[0] * scores.helpfulness + weights[1] * scores.correctness +
         weights[2] * scores.coherence + weights[3] * scores.complexity +
         weights[4] * scores.verbosity;
}

std::optional<Verdict> helpsteer_gold(const HelpSteerScores& scores_1,
                                      const HelpSteerScores& scores_2,
                                      const std::array<double, 5>& weights) {
  const double a = aggregate_score(scores_1, weights);
  const double b = aggregate_score(scores_2, weights);
  if (a > b) return Verdict::A;
  if (a < b) return Verdict::B;
  return std::nullopt;
}

std::string normalize_numeric(std::string_view answer) {
  std::string out;
  out.reserve(answer.size());
  for (unsigned char c : answer) {
    if (c == ',' || std::isspace(c)) continue;
    out += static_cast<char>(c);
  }
  return out;
}

std::optional<ResponsePair> correctness_pairing(
    const Instruction& instruction,
    const std::vector<std::pair<std::string, std::string>>& solutions,
    const std::string& gold_answer, const std::string& generator_model) {
  const std::string gold = normalize_numeric(gold_answer);
  const std::string* first_correct = nullptr;
  const std::string* first_incorrect = nullptr;
  for (const auto& [text, final_answer] : solutions) {
    const bool correct = normalize_numeric(final_answer) == gold;
    if (correct && !first_correct) first_correct = &text;
    if (!correct && !first_incorrect) first_incorrect = &text;
    if (first_correct && first_incorrect) break;
  }
  if (!first_correct || !first_incorrect) {
    return std::nullopt;
  }
  ResponsePair pair{instruction.id,         *first_correct,
                    *first_incorrect,       std::nullopt,
                    PairMethod::correctness_paired, generator_model};
  validate(pair);
  return pair;
}

ResponsePair external_label_adapter(const Instruction& instruction,
                                    const std::string& chosen,
                                    const std::string& rejected,
                                    const std::string& source_tag) {
  ResponsePair pair{instruction.id, chosen,
                    rejected,       std::nullopt,
                    PairMethod::external_labeled, source_tag};
  validate(pair);
  return pair;
}

// ---------------------------------------------------------------------------
// Record-level adapters

namespace {

/// The instruction field may be a full Instruction object or a bare
/// string; bare strings become single-turn instructions with a
/// content-derived id unless the record carries one.
Instruction instruction_from_json(const nlohmann::json& j) {
  const auto& field = j.at("instruction");
  if (field.is_string()) {
    std::string id = j.value("id", "rec-" + rng::to_hex(rng::fnv1a64(j.dump())));
    return Instruction::single(std::move(id), field.get<std::string>(),
                               j.value("source", ""));
  }
  return field.get<Instruction>();
}

}  // namespace

void from_json(const nlohmann::json& j, HelpSteerRecord& v) {
  v.instruction = instruction_from_json(j);
  v.response_1 = j.at("response_1").get<std::string>();
  v.response_2 = j.at("response_2").get<std::string>();
  v.scores_1 = j.at("scores_1").get<HelpSteerScores>();
  v.scores_2 = j.at("scores_2").get<HelpSteerScores>();
}

std::optional<ResponsePair> helpsteer_pair(const HelpSteerRecord& record,
                                           const std::array<double, 5>& weights) {
  auto gold = helpsteer_gold(record.scores_1, record.scores_2, weights);
  if (!gold) {
    return std::nullopt;
  }
  const bool first_wins = *gold == Verdict::A;
  return external_label_adapter(record.instruction,
                                first_wins ? record.response_1 : record.response_2,
                                first_wins ? record.response_2 : record.response_1,
                                "helpsteer2");
}

void from_json(const nlohmann::json& j, SolutionRecord& v) {
  v.instruction = instruction_from_json(j);
  v.solutions.clear();
  for (const auto& s : j.at("solutions")) {
    std::string final_answer = s.at("final_answer").is_string()
                                   ? s.at("final_answer").get<std::string>()
                                   : s.at("final_answer").dump();
    v.solutions.emplace_back(s.at("text").get<std::string>(),
                             std::move(final_answer));
  }
  v.gold_answer = j.at("gold_answer").is_string()
                      ? j.at("gold_answer").get<std::string>()
                      : j.at("gold_answer").dump();
}

void from_json(const nlohmann::json& j, ExternalRecord& v) {
  v.instruction = instruction_from_json(j);
  v.chosen = j.at("chosen").get<std::string>();
  v.rejected = j.at("rejected").get<std::string>();
  v.source = j.value("source", "external");
}

}  // namespace judgekit::annotation
