#pragma once

// Instruction curation: LLM categorization of an uncurated pool,
// filtered selection of a challenging subset, and distribution reports
// over the curated set.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "judgekit/gateway.hpp"
#include "judgekit/types.hpp"

namespace judgekit::curation {

/// The categorization prompt with the instruction text substituted
/// between the <instruction> delimiters, verbatim (no escaping).
std::string render_selection_prompt(const Instruction& instruction);

/// Extracts the "Category:", "Complexity:", "Length:" lines from a
/// categorization reply. Throws ParseError (carrying the raw text) when
/// any field is missing or unmatchable.
CategoryAnnotation parse_selection_response(const std::string& text);

struct AnnotatedInstruction {
  Instruction instruction;
  CategoryAnnotation annotation;

  friend bool operator==(const AnnotatedInstruction&,
                         const AnnotatedInstruction&) = default;
};

void to_json(nlohmann::json& j, const AnnotatedInstruction& v);
void from_json(const nlohmann::json& j, AnnotatedInstruction& v);

struct CategorizeResult {
  std::vector<AnnotatedInstruction> annotated;
  std::vector<std::string> dropped_ids;  // unparseable after one re-ask
};

/// Categorizes a pool through the gateway (bounded fan-out). An
/// unparseable reply gets one re-ask; a second failure drops the
/// instruction.
CategorizeResult categorize_pool(
    llm::Gateway& gateway, const std::vector<Instruction>& pool,
    const std::string& model,
    const SamplingParams& sampling = sampling_presets::deterministic_eval());

struct SelectionFilter {
  std::vector<Category> allowed_categories = {
      Category::knowledge_and_reasoning, Category::mathematical_reasoning};
  std::optional<std::size_t> max_count;
  int min_complexity = 0;
  bool dedupe = true;
  std::uint64_t seed = 0;
  /// Instructions longer than this many whitespace tokens are excluded.
  std::size_t max_whitespace_tokens = 3000;
};

/// Filters by category/complexity/length budget, removes exact duplicate
/// texts, and truncates to max_count by seeded uniform sampling. Output
/// is deterministic given (pool, filter, seed).
std::vector<Instruction> select_instructions(
    const std::vector<AnnotatedInstruction>& pool, const SelectionFilter& filter);

std::size_t whitespace_token_count(std::string_view text);

struct DistributionReport {
  std::map<std::string, std::size_t> category_histogram;
  std::map<int, std::size_t> complexity_histogram;
  std::map<std::string, std::size_t> length_histogram;
  std::map<std::size_t, std::size_t> token_length_histogram;

  friend bool operator==(const DistributionReport&,
                         const DistributionReport&) = default;
};

DistributionReport distribution_report(
    const std::vector<AnnotatedInstruction>& pool);

nlohmann::json report_to_json(const DistributionReport& report);
/// Plot-ready CSV: histogram,key,count
std::string report_to_csv(const DistributionReport& report);

}  // namespace judgekit::curation
