#pragma once

// Domain types shared by every pipeline stage. All types are immutable
// value types once constructed and safe to share across threads.
// Canonical on-disk form is one JSON object per line (JSONL, UTF-8) with
// field names matching the member names below.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "judgekit/errors.hpp"

namespace judgekit {

// ---------------------------------------------------------------------------
// Instructions

enum class Role { user, assistant };

std::string to_string(Role role);
Role role_from_string(std::string_view s);

struct Turn {
  Role role = Role::user;
  std::string text;

  friend bool operator==(const Turn&, const Turn&) = default;
};

/// A user instruction: either a single user message or a multi-turn
/// dialog whose last turn is from the user.
struct Instruction {
  std::string id;
  std::vector<Turn> turns;
  std::string source;

  static Instruction single(std::string id, std::string text,
                            std::string source = "");

  const std::string& last_user_text() const;

  /// Text form used inside prompt templates: a single-turn instruction
  /// is its bare text; a multi-turn dialog is flattened to "role: text"
  /// lines (lossless, one line header per turn).
  std::string flattened_text() const;

  friend bool operator==(const Instruction&, const Instruction&) = default;
};

void validate(const Instruction& instruction);

/// Loads an instruction pool, rejecting duplicate ids.
std::vector<Instruction> load_instruction_pool(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Instruction categorization

enum class Category {
  coding,
  mathematical_reasoning,
  asking_for_advice,
  brainstorming,
  classification,
  closed_question_answering,
  creative_writing,
  extraction,
  inhabiting_a_character_persona,
  open_question_answering,
  rewriting,
  summarization,
  knowledge_and_reasoning,
  humanity_history_or_social_studies,
  other,
};

inline constexpr int kCategoryCount = 15;

const std::array<std::string_view, kCategoryCount>& category_names();
std::string to_string(Category category);
/// Case-insensitive match against the canonical category names.
std::optional<Category> category_from_string(std::string_view name);

struct CategoryAnnotation {
  Category category = Category::other;
  int complexity = 1;          // positive integer; prompts ask for 1-10
  char expected_length = 'c';  // 'a'..'e'

  friend bool operator==(const CategoryAnnotation&,
                         const CategoryAnnotation&) = default;
};

void validate(const CategoryAnnotation& annotation);

// ---------------------------------------------------------------------------
// Preference pairs

enum class PairMethod {
  noisy_instruction,
  degraded_response,
  external_labeled,
  correctness_paired,
};

std::string to_string(PairMethod method);
PairMethod pair_method_from_string(std::string_view s);

/// A chosen/rejected response pair for one instruction, with provenance
/// for how the rejected response was constructed.
struct ResponsePair {
  std::string instruction_id;
  std::string chosen;
  std::string rejected;
  /// The modified instruction whose good answer became `rejected`;
  /// present exactly when method == noisy_instruction.
  std::optional<std::string> modified_instruction;
  PairMethod method = PairMethod::noisy_instruction;
  std::string generator_model;

  friend bool operator==(const ResponsePair&, const ResponsePair&) = default;
};

void validate(const ResponsePair& pair);

// ---------------------------------------------------------------------------
// Judgments

enum class Verdict { A, B };

constexpr Verdict opposite(Verdict v) {
  return v == Verdict::A ? Verdict::B : Verdict::A;
}
constexpr char letter(Verdict v) { return v == Verdict::A ? 'A' : 'B'; }

std::string to_string(Verdict v);
Verdict verdict_from_string(std::string_view s);

/// A pair presented in randomized A/B order, with the hidden gold
/// verdict implied by the pair's construction.
struct OrderedExample {
  std::string example_id;
  Instruction instruction;
  std::string response_a;
  std::string response_b;
  Verdict gold = Verdict::A;  // A iff response_a is the chosen response
  std::int64_t order_seed = 0;

  const std::string& chosen_response() const {
    return gold == Verdict::A ? response_a : response_b;
  }
  const std::string& rejected_response() const {
    return gold == Verdict::A ? response_b : response_a;
  }

  friend bool operator==(const OrderedExample&,
                         const OrderedExample&) = default;
};

void validate(const OrderedExample& example);

/// One sampled reasoning chain plus its parsed verdict. `verdict` is
/// absent when the text contains no final [[A]]/[[B]] marker; when
/// present it must be what the verdict parser extracts from `raw`.
struct JudgmentSample {
  std::string raw;
  std::optional<Verdict> verdict;
  int sample_index = 0;

  friend bool operator==(const JudgmentSample&,
                         const JudgmentSample&) = default;
};

/// A rejection-filtered example: the retained judgment's verdict always
/// equals the ordered example's gold verdict.
struct TrainingExample {
  OrderedExample ordered;
  JudgmentSample judgment;
  int iteration = 0;

  friend bool operator==(const TrainingExample&,
                         const TrainingExample&) = default;
};

void validate(const TrainingExample& example);

// ---------------------------------------------------------------------------
// Sampling

struct SamplingParams {
  double temperature = 0.7;
  double top_p = 0.9;
  int n = 1;

  SamplingParams with_n(int count) const;

  friend bool operator==(const SamplingParams&,
                         const SamplingParams&) = default;
};

/// Validates and normalizes: temperature 0 means deterministic intent,
/// so n is forced to 1.
SamplingParams make_sampling(double temperature, double top_p, int n);
void validate(const SamplingParams& params);

namespace sampling_presets {
/// Judgment / generation sampling.
inline SamplingParams generation(int n = 1) { return {0.7, 0.9, n}; }
/// Deterministic single-shot evaluation.
inline SamplingParams deterministic_eval() { return {0.0, 1.0, 1}; }
/// Majority-vote evaluation.
inline SamplingParams majority_vote_eval(int n) { return {0.7, 0.9, n}; }
}  // namespace sampling_presets

/// Default number of judgments sampled per example during annotation.
inline constexpr int kDefaultJudgmentSamples = 15;

// ---------------------------------------------------------------------------
// JSON bindings (canonical record form; from_json re-validates invariants)

void to_json(nlohmann::json& j, const Turn& v);
void from_json(const nlohmann::json& j, Turn& v);
void to_json(nlohmann::json& j, const Instruction& v);
void from_json(const nlohmann::json& j, Instruction& v);
void to_json(nlohmann::json& j, const CategoryAnnotation& v);
void from_json(const nlohmann::json& j, CategoryAnnotation& v);
void to_json(nlohmann::json& j, const ResponsePair& v);
void from_json(const nlohmann::json& j, ResponsePair& v);
void to_json(nlohmann::json& j, const OrderedExample& v);
void from_json(const nlohmann::json& j, OrderedExample& v);
void to_json(nlohmann::json& j, const JudgmentSample& v);
void from_json(const nlohmann::json& j, JudgmentSample& v);
void to_json(nlohmann::json& j, const TrainingExample& v);
void from_json(const nlohmann::json& j, TrainingExample& v);
void to_json(nlohmann::json& j, const SamplingParams& v);
void from_json(const nlohmann::json& j, SamplingParams& v);

}  // namespace judgekit
