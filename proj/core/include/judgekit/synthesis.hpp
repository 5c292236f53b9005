#pragma once

// Synthetic preference-pair construction. The chosen response is the
// generator's ordinary answer to the instruction; the rejected response
// comes from one of two prompting schemes:
//   - noisy-instruction: answer a related-but-different instruction well,
//     yielding a plausible but off-target response to the original;
//   - degraded-response: rewrite the baseline answer to be worse.
// Pairs are then placed into randomized A/B order with a content-derived
// coin so that resuming a partial run never changes earlier placements.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "judgekit/gateway.hpp"
#include "judgekit/types.hpp"

namespace judgekit::synthesis {

std::string render_pair_prompt(const Instruction& instruction,
                               const std::string& baseline);
std::string render_degrade_prompt(const Instruction& instruction,
                                  const std::string& baseline);

struct PairParts {
  std::string modified_instruction;
  std::string worse_response;

  friend bool operator==(const PairParts&, const PairParts&) = default;
};

/// Extracts the modified instruction and the answer-to-it from a
/// pair-construction reply. Both bracketed and bare section headers are
/// accepted. Throws ParseError when either section is missing or empty.
PairParts parse_pair_response(const std::string& text);

/// Extracts the rewritten worse answer from a degrade reply; when the
/// delimiters appear more than once the first matched pair wins.
std::string parse_degrade_response(const std::string& text);

/// The generator's plain single completion for the instruction (no judge
/// system prompt). Throws on an empty completion.
std::string generate_baseline(llm::Gateway& gateway, const Instruction& instruction,
                              const std::string& model,
                              const SamplingParams& sampling);

struct BuildOptions {
  std::string model;
  SamplingParams sampling = sampling_presets::generation();
  /// Extra samples drawn after a parse failure before giving up.
  int parse_retries = 1;
};

/// Baseline + render + parse composed into a validated ResponsePair.
/// Parse failures are retried with fresh samples; invariant violations
/// (e.g. a worse response identical to the baseline) are not.
ResponsePair build_pair(llm::Gateway& gateway, const Instruction& instruction,
                        PairMethod method, const BuildOptions& options);

struct BatchResult {
  std::vector<std::pair<Instruction, ResponsePair>> pairs;
  std::vector<std::string> failed_ids;
};

BatchResult build_pairs(llm::Gateway& gateway,
                        const std::vector<Instruction>& instructions,
                        PairMethod method, const BuildOptions& options);

/// Randomizes which side the chosen response lands on via a hash of
/// (instruction_id, seed); gold tracks the placement.
OrderedExample assemble_ordered_example(const Instruction& instruction,
                                        const ResponsePair& pair,
                                        std::uint64_t seed);

std::vector<OrderedExample> assemble_all(const BatchResult& batch,
                                         std::uint64_t seed);

}  // namespace judgekit::synthesis
