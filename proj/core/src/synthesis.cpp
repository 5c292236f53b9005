#include "judgekit/synthesis.hpp"

#include <cctype>
#include <optional>

#include "judgekit/rng.hpp"

namespace judgekit::synthesis {

namespace {

constexpr std::string_view kPairPromptIntro =
    "Below is a conversation between an user and an AI Assistant.\n"
    "\n";

constexpr std::string_view kPairPromptBody =
    "\n"
    "Please first generate a modified instruction that is highly relevant "
    "but not semantically identical to the instruction above from the "
    "user. Then write a high-quality answer which is a good response to "
    "the modified instruction but not a good response to the original "
    "user question. IMPORTANT: Please strictly follow the following "
    "format:\n"
    "\n"
    "User Question Modified\n"
    "<provide a modified instruction here>\n"
    "\n"
    "The start of Assistant's answer to the modified instruction\n"
    "<provide a high-quality response to the modified instruction>\n"
    "The end of Assistant's answer to the modified instruction\n";

constexpr std::string_view kDegradePromptBody =
    "\n"
    "Please rewrite the Assistant's Answer to make it worse. "
    "Specifically, the rewritten worse answer should closely resemble "
    "the original answer but is worse in terms of one or multiple of the "
    "following aspects: helpfulness, correctness, coherence, verbosity.\n"
    "\n"
    "IMPORTANT: Please strictly follow the following format:\n"
    "\n"
    "First, choose one or multiple aspects to generate a worse answer, "
    "such as rewrite the original answer to be unhelpful, incorrect, "
    "lack of coherence, more verbose, etc.\n"
    "\n"
    "[The start of a rewritten worse answer]\n"
    "\n"
    "<provide a worse answer here>\n"
    "\n"
    "[The end of a rewritten worse answer]\n";

constexpr std::string_view kModifiedQuestionHeader = "User Question Modified";
constexpr std::string_view kModifiedAnswerStart =
    "The start of Assistant's answer to the modified instruction";
constexpr std::string_view kModifiedAnswerEnd =
    "The end of Assistant's answer to the modified instruction";
constexpr std::string_view kWorseAnswerStart =
    "The start of a rewritten worse answer";
constexpr std::string_view kWorseAnswerEnd =
    "The end of a rewritten worse answer";

struct MarkerSpan {
  std::size_t begin;
  std::size_t end;  // one past the marker (and its closing bracket, if any)
};

/// Finds `marker` at or after `from`, with or without surrounding
/// square brackets.
std::optional<MarkerSpan> find_marker(const std::string& text,
                                      std::string_view marker, std::size_t from) {
  const std::size_t pos = text.find(marker, from);
  if (pos == std::string::npos) return std::nullopt;
  std::size_t begin = pos;
  std::size_t end = pos + marker.size();
  if (begin > 0 && text[begin - 1] == '[' && end < text.size() &&
      text[end] == ']') {
    --begin;
    ++end;
  }
  return MarkerSpan{begin, end};
}

std::string trimmed_slice(const std::string& text, std::size_t begin,
                          std::size_t end) {
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) {
    ++begin;
  }
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) {
    --end;
  }
  return text.substr(begin, end - begin);
}

}  // namespace

std::string render_pair_prompt(const Instruction& instruction,
                               const std::string& baseline) {
  std::string out;
  out += kPairPromptIntro;
  out += instruction.flattened_text();
  out += "\n\nThe start of Assistant's Answer\n";
  out += baseline;
  out += "\nThe end of Assistant's Answer\n";
  out += kPairPromptBody;
  return out;
}

std::string render_degrade_prompt(const Instruction& instruction,
                                  const std::string& baseline) {
  std::string out;
  out += "Below is a conversation between an user and an AI Assistant.\n\n";
  out += "[User Question]\n";
  out += instruction.flattened_text();
  out += "\n\n[The start of Assistant's Answer]\n";
  out += baseline;
  out += "\n[The end of Assistant's Answer]\n";
  out += kDegradePromptBody;
  return out;
}

PairParts parse_pair_response(const std::string& text) {
  auto question = find_marker(text, kModifiedQuestionHeader, 0);
  if (!question) {
    throw ParseError("reply has no modified-question section", text);
  }
  auto answer_start = find_marker(text, kModifiedAnswerStart, question->end);
  if (!answer_start) {
    throw ParseError("reply has no modified-answer start delimiter", text);
  }
  auto answer_end = find_marker(text, kModifiedAnswerEnd, answer_start->end);
  if (!answer_end) {
    throw ParseError("reply has no modified-answer end delimiter", text);
  }

  PairParts parts{trimmed_slice(text, question->end, answer_start->begin),
                  trimmed_slice(text, answer_start->end, answer_end->begin)};
  if (parts.modified_instruction.empty()) {
    throw ParseError("modified instruction is empty", text);
  }
  if (parts.worse_response.empty()) {
    throw ParseError("answer to the modified instruction is empty", text);
  }
  return parts;
}

std::string parse_degrade_response(const std::string& text) {
  auto start = find_marker(text, kWorseAnswerStart, 0);
  if (!start) {
    throw ParseError("reply has no worse-answer start delimiter", text);
  }
  auto end = find_marker(text, kWorseAnswerEnd, start->end);
  if (!end) {
    throw ParseError("reply has no worse-answer end delimiter", text);
  }
  std::string worse = trimmed_slice(text, start->end, end->begin);
  if (worse.empty()) {
    throw ParseError("rewritten worse answer is empty", text);
  }
  return worse;
}

std::string generate_baseline(llm::Gateway& gateway, const Instruction& instruction,
                              const std::string& model,
                              const SamplingParams& sampling) {
  auto request = llm::ChatRequest::simple(model, instruction.flattened_text(),
                                          sampling.with_n(1));
  auto completion = gateway.complete_one(request, 0);
  if (completion.text.empty()) {
    throw GatewayError("empty baseline completion for instruction " +
                       instruction.id);
  }
  return completion.text;
}

ResponsePair build_pair(llm::Gateway& gateway, const Instruction& instruction,
                        PairMethod method, const BuildOptions& options) {
  if (method != PairMethod::noisy_instruction &&
      method != PairMethod::degraded_response) {
    throw ConfigError("build_pair supports the noisy-instruction and "
                      "degraded-response methods only");
  }

  const std::string baseline =
      generate_baseline(gateway, instruction, options.model, options.sampling);

  const std::string prompt = method == PairMethod::noisy_instruction
                                 ? render_pair_prompt(instruction, baseline)
                                 : render_degrade_prompt(instruction, baseline);
  auto request =
      llm::ChatRequest::simple(options.model, prompt, options.sampling.with_n(1));

  std::optional<ParseError> last_error;
  for (int attempt = 0; attempt <= options.parse_retries; ++attempt) {
    auto completion = gateway.complete_one(request, attempt);
    try {
      ResponsePair pair;
      pair.instruction_id = instruction.id;
      pair.chosen = baseline;
      pair.method = method;
      pair.generator_model = options.model;
      if (method == PairMethod::noisy_instruction) {
        auto parts = parse_pair_response(completion.text);
        pair.rejected = std::move(parts.worse_response);
        pair.modified_instruction = std::move(parts.modified_instruction);
      } else {
        pair.rejected = parse_degrade_response(completion.text);
      }
      validate(pair);
      return pair;
    } catch (const ParseError& e) {
      last_error = e;
    }
  }
  throw *last_error;
}

BatchResult build_pairs(llm::Gateway& gateway,
                        const std::vector<Instruction>& instructions,
                        PairMethod method, const BuildOptions& options) {
  struct Outcome {
    std::optional<ResponsePair> pair;
    std::string failed_id;
  };

  auto outcomes = llm::parallel_map(
      instructions, gateway.parallelism(),
      [&](const Instruction& instruction, std::size_t) -> Outcome {
        try {
          return Outcome{build_pair(gateway, instruction, method, options), ""};
        } catch (const ParseError&) {
          return Outcome{std::nullopt, instruction.id};
        } catch (const ValidationError&) {
          return Outcome{std::nullopt, instruction.id};
        }
      });

  BatchResult result;
  for (std::size_t i = 0; i < instructions.size(); ++i) {
    if (outcomes[i].pair) {
      result.pairs.emplace_back(instructions[i], std::move(*outcomes[i].pair));
    } else {
      result.failed_ids.push_back(std::move(outcomes[i].failed_id));
    }
  }
  return result;
}

namespace {

std::string method_tag(PairMethod method) {
  switch (method) {
    case PairMethod::noisy_instruction: return "noisy";
    case PairMethod::degraded_response: return "degraded";
    case PairMethod::external_labeled: return "external";
    case PairMethod::correctness_paired: return "correctness";
  }
  throw ValidationError("bad PairMethod value");
}

}  // namespace

OrderedExample assemble_ordered_example(const Instruction& instruction,
                                        const ResponsePair& pair,
                                        std::uint64_t seed) {
  validate(pair);
  if (instruction.id != pair.instruction_id) {
    throw ValidationError("pair does not belong to instruction " + instruction.id);
  }

  const std::uint64_t coin =
      rng::mix(seed, rng::fnv1a64(pair.instruction_id));
  const bool chosen_first = (coin & 1) == 0;

  OrderedExample example;
  example.example_id = pair.instruction_id + ":" + method_tag(pair.method);
  example.instruction = instruction;
  example.response_a = chosen_first ? pair.chosen : pair.rejected;
  example.response_b = chosen_first ? pair.rejected : pair.chosen;
  example.gold = chosen_first ? Verdict::A : Verdict::B;
  example.order_seed = static_cast<std::int64_t>(seed);
  validate(example);
  return example;
}

std::vector<OrderedExample> assemble_all(const BatchResult& batch,
                                         std::uint64_t seed) {
  std::vector<OrderedExample> out;
  out.reserve(batch.pairs.size());
  for (const auto& [instruction, pair] : batch.pairs) {
    out.push_back(assemble_ordered_example(instruction, pair, seed));
  }
  return out;
}

}  // namespace judgekit::synthesis
