#pragma once

// Judgment annotation: sample N reasoning chains per ordered example,
// parse verdicts, keep one correct chain at random (rejection sampling
// against the gold label), then balance the two verdict classes.
// Also adapts externally scored/labeled datasets into gold-labeled pairs.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "judgekit/gateway.hpp"
#include "judgekit/types.hpp"

namespace judgekit::annotation {

// ---------------------------------------------------------------------------
// Judge prompting

/// Pairwise evaluation rubric used as the judge's system message (the
/// standard MT-Bench / RewardBench system prompt).
extern const std::string kJudgeSystemPrompt;

struct JudgePrompt {
  std::string system;
  std::string user;

  friend bool operator==(const JudgePrompt&, const JudgePrompt&) = default;
};

JudgePrompt render_judge_prompt(const OrderedExample& example);

llm::ChatRequest judge_request(const OrderedExample& example,
                               const std::string& model,
                               const SamplingParams& sampling);

/// Scans for "[[A]]"/"[[B]]" markers and returns the verdict of the last
/// occurrence; absent when neither marker appears.
std::optional<Verdict> extract_verdict(std::string_view raw);

/// Prompt-hash -> gold map for wiring the simulated mock judge to a
/// pool; include_swapped also registers each example with its responses
/// swapped (needed for both-order evaluation).
std::unordered_map<std::uint64_t, Verdict> judge_prompt_gold_map(
    const std::vector<OrderedExample>& pool, bool include_swapped = false);

// ---------------------------------------------------------------------------
// Sampling and filtering

/// Exactly n judgment samples for the example, verdicts populated via
/// extract_verdict, raw texts retained.
std::vector<JudgmentSample> sample_judgments(
    llm::Gateway& gateway, const OrderedExample& example,
    const std::string& model, int n,
    const SamplingParams& sampling = sampling_presets::generation());

/// Keeps samples whose verdict equals gold and retains one of them
/// uniformly at random (seeded); absent when none survive. Samples with
/// no parsed verdict count as incorrect.
std::optional<TrainingExample> rejection_filter(
    const OrderedExample& example, const std::vector<JudgmentSample>& samples,
    std::uint64_t seed, int iteration = 0);

/// Downsamples the majority gold class so both verdict labels are
/// equally frequent; output order is a seeded shuffle.
std::vector<TrainingExample> balance(std::vector<TrainingExample> examples,
                                     std::uint64_t seed);

struct AnnotateStats {
  std::size_t total = 0;
  std::size_t retained = 0;
  std::size_t discarded = 0;
};

struct AnnotateResult {
  std::vector<TrainingExample> examples;
  AnnotateStats stats;
};

/// Per-example annotation over the whole pool (bounded fan-out through
/// the gateway), unbalanced. Gateway failures abort the run; the cache
/// makes re-runs resume where they stopped.
AnnotateResult annotate_pool(llm::Gateway& gateway,
                             const std::vector<OrderedExample>& pool,
                             const std::string& model, int n,
                             const SamplingParams& sampling, std::uint64_t seed,
                             int iteration);

// ---------------------------------------------------------------------------
// External data sources

struct HelpSteerScores {
  double helpfulness = 0;
  double correctness = 0;
  double coherence = 0;
  double complexity = 0;
  double verbosity = 0;

  friend bool operator==(const HelpSteerScores&,
                         const HelpSteerScores&) = default;
};

void to_json(nlohmann::json& j, const HelpSteerScores& v);
void from_json(const nlohmann::json& j, HelpSteerScores& v);

/// Attribute weights (helpfulness, correctness, coherence, complexity,
/// verbosity) for aggregating per-response scores into a preference.
inline constexpr std::array<double, 5> kHelpSteerWeights{0.65, 0.8, 0.45,
                                                         0.55, -0.4};

double aggregate_score(const HelpSteerScores& scores,
                       const std::array<double, 5>& weights = kHelpSteerWeights);

/// A when the first response's aggregate is higher, B when lower, absent
/// on an exact tie (ties carry no preference signal).
std::optional<Verdict> helpsteer_gold(
    const HelpSteerScores& scores_1, const HelpSteerScores& scores_2,
    const std::array<double, 5>& weights = kHelpSteerWeights);

/// Normalizes a numeric answer string for exact comparison: commas and
/// whitespace are stripped.
std::string normalize_numeric(std::string_view answer);

/// Pairs the first solution whose final answer matches gold (chosen)
/// with the first that does not (rejected); absent when either side is
/// missing. Solutions are (text, final_answer).
std::optional<ResponsePair> correctness_pairing(
    const Instruction& instruction,
    const std::vector<std::pair<std::string, std::string>>& solutions,
    const std::string& gold_answer, const std::string& generator_model = "");

/// Wraps an externally labeled (chosen, rejected) record; the source tag
/// is recorded as the pair's generator identifier.
ResponsePair external_label_adapter(const Instruction& instruction,
                                    const std::string& chosen,
                                    const std::string& rejected,
                                    const std::string& source_tag);

// ---------------------------------------------------------------------------
// Record-level adapters (JSONL inputs)

struct HelpSteerRecord {
  Instruction instruction;
  std::string response_1;
  std::string response_2;
  HelpSteerScores scores_1;
  HelpSteerScores scores_2;
};

void from_json(const nlohmann::json& j, HelpSteerRecord& v);

/// Absent on tie; otherwise an external-labeled pair whose chosen side
/// is the higher-aggregate response.
std::optional<ResponsePair> helpsteer_pair(
    const HelpSteerRecord& record,
    const std::array<double, 5>& weights = kHelpSteerWeights);

struct SolutionRecord {
  Instruction instruction;
  std::vector<std::pair<std::string, std::string>> solutions;  // (text, final)
  std::string gold_answer;
};

void from_json(const nlohmann::json& j, SolutionRecord& v);

struct ExternalRecord {
  Instruction instruction;
  std::string chosen;
  std::string rejected;
  std::string source;
};

void from_json(const nlohmann::json& j, ExternalRecord& v);

}  // namespace judgekit::annotation
