#include "judgekit/curation.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "judgekit/rng.hpp"

namespace judgekit::curation {

namespace {

constexpr std::string_view kSelectionPromptPrefix =
    "I have an instruction below that I would like you to perform three "
    "steps of analysis about the instruction:\n"
    "\n"
    "<instruction>\n";

constexpr std::string_view kSelectionPromptSuffix =
    "\n</instruction>\n"
    "\n"
    "Firstly, categorize the instruction above into one of the following "
    "categories:\n"
    "\n"
    "Coding\n"
    "Mathematical reasoning\n"
    "Asking for Advice\n"
    "Brainstorming\n"
    "Classification\n"
    "Closed Question Answering\n"
    "Creative Writing\n"
    "Extraction\n"
    "Inhabiting a Character/Persona\n"
    "Open Question Answering\n"
    "Rewriting\n"
    "Summarization\n"
    "Knowledge and Reasoning\n"
    "Humanity, History or Social Studies\n"
    "Other\n"
    "\n"
    "Secondly, score the instruction in terms of complexity: how complex "
    "you think it is to answer from 1-10 (where 10 is a complex question "
    "whereby first reasoning or breaking down the question into multiple "
    "subquestions for example might help improve the answer).\n"
    "\n"
    "Thirdly, indicate how long you think the response to the instruction "
    "should be, either (a) 1 sentence, (b) 1-3 sentences, (c) 1 paragraph, "
    "(d) 2 paragraphs, or (e) 3 or more paragraphs.\n"
    "\n"
    "Provide your final response in the following format:\n"
    "Category: <one of the categories above>\n"
    "Complexity: <score out of 10>\n"
    "Length: <choose from (a) to (e)>. DO NOT provide the actual response.";

std::string trim(std::string_view s) {
  std::size_t begin = 0;
  std::size_t end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
  return std::string(s.substr(begin, end - begin));
}

/// Case-insensitive "Key:" prefix match; returns the rest of the line.
std::optional<std::string> field_value(std::string_view line, std::string_view key) {
  const std::string trimmed = trim(line);
  if (trimmed.size() < key.size() + 1) return std::nullopt;
  for (std::size_t i = 0; i < key.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(trimmed[i])) !=
        std::tolower(static_cast<unsigned char>(key[i]))) {
      return std::nullopt;
    }
  }
  if (trimmed[key.size()] != ':') return std::nullopt;
  return trim(trimmed.substr(key.size() + 1));
}

}  // namespace

std::string render_selection_prompt(const Instruction& instruction) {
  std::string out;
  out.reserve(kSelectionPromptPrefix.size() + kSelectionPromptSuffix.size() + 256);
  out += kSelectionPromptPrefix;
  out += instruction.flattened_text();
  out += kSelectionPromptSuffix;
  return out;
}

CategoryAnnotation parse_selection_response(const std::string& text) {
  std::optional<Category> category;
  std::optional<int> complexity;
  std::optional<char> length;

  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (!category) {
      if (auto value = field_value(line, "Category")) {
        category = category_from_string(*value);
        if (!category) {
          throw ParseError("unrecognized category name: " + *value, text);
        }
      }
    }
    if (!complexity) {
      if (auto value = field_value(line, "Complexity")) {
        try {
          complexity = std::stoi(*value);
        } catch (const std::exception&) {
          throw ParseError("complexity is not an integer: " + *value, text);
        }
      }
    }
    if (!length) {
      if (auto value = field_value(line, "Length")) {
        std::string v = *value;
        // accept "(c)", "c", "(c) 1 paragraph"
        if (!v.empty() && v.front() == '(') v.erase(0, 1);
        if (v.empty()) {
          throw ParseError("empty length field", text);
        }
        const char c = static_cast<char>(
            std::tolower(static_cast<unsigned char>(v.front())));
        if (c < 'a' || c > 'e') {
          throw ParseError("length must be a letter a-e: " + *value, text);
        }
        length = c;
      }
    }
  }

  if (!category) throw ParseError("missing Category: line", text);
  if (!complexity) throw ParseError("missing Complexity: line", text);
  if (!length) throw ParseError("missing Length: line", text);

  CategoryAnnotation annotation{*category, *complexity, *length};
  validate(annotation);
  return annotation;
}

void to_json(nlohmann::json& j, const AnnotatedInstruction& v) {
  j = nlohmann::json{{"instruction", v.instruction}, {"annotation", v.annotation}};
}

void from_json(const nlohmann::json& j, AnnotatedInstruction& v) {
  v.instruction = j.at("instruction").get<Instruction>();
  v.annotation = j.at("annotation").get<CategoryAnnotation>();
}

CategorizeResult categorize_pool(llm::Gateway& gateway,
                                 const std::vector<Instruction>& pool,
                                 const std::string& model,
                                 const SamplingParams& sampling) {
  struct Outcome {
    std::optional<AnnotatedInstruction> annotated;
    std::string dropped_id;
  };

  auto outcomes = llm::parallel_map(
      pool, gateway.parallelism(),
      [&](const Instruction& instruction, std::size_t) -> Outcome {
        auto request = llm::ChatRequest::simple(
            model, render_selection_prompt(instruction), sampling.with_n(1));
        for (int attempt = 0; attempt < 2; ++attempt) {
          auto completion = gateway.complete_one(request, attempt);
          try {
            return Outcome{
                AnnotatedInstruction{instruction,
                                     parse_selection_response(completion.text)},
                ""};
          } catch (const ParseError&) {
            // one re-ask, then drop
          }
        }
        return Outcome{std::nullopt, instruction.id};
      });

  CategorizeResult result;
  for (auto& outcome : outcomes) {
    if (outcome.annotated) {
      result.annotated.push_back(std::move(*outcome.annotated));
    } else {
      result.dropped_ids.push_back(std::move(outcome.dropped_id));
    }
  }
  return result;
}

std::size_t whitespace_token_count(std::string_view text) {
  std::size_t count = 0;
  bool in_token = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++count;
    }
  }
  return count;
}

std::vector<Instruction> select_instructions(
    const std::vector<AnnotatedInstruction>& pool, const SelectionFilter& filter) {
  std::vector<Instruction> kept;
  std::unordered_set<std::string> seen_texts;
  for (const auto& [instruction, annotation] : pool) {
    const bool category_ok =
        std::find(filter.allowed_categories.begin(), filter.allowed_categories.end(),
                  annotation.category) != filter.allowed_categories.end();
    if (!category_ok) continue;
    if (annotation.complexity < filter.min_complexity) continue;
    const std::string text = instruction.flattened_text();
    if (whitespace_token_count(text) > filter.max_whitespace_tokens) continue;
    if (filter.dedupe && !seen_texts.insert(text).second) continue;
    kept.push_back(instruction);
  }

  if (filter.max_count && kept.size() > *filter.max_count) {
    rng::SplitMix64 gen(rng::mix(filter.seed, rng::fnv1a64("select")));
    auto indices = rng::sample_indices(kept.size(), *filter.max_count, gen);
    std::vector<Instruction> sampled;
    sampled.reserve(indices.size());
    for (std::size_t i : indices) {
      sampled.push_back(std::move(kept[i]));
    }
    return sampled;
  }
  return kept;
}

DistributionReport distribution_report(
    const std::vector<AnnotatedInstruction>& pool) {
  DistributionReport report;
  for (const auto& [instruction, annotation] : pool) {
    report.category_histogram[to_string(annotation.category)] += 1;
    report.complexity_histogram[annotation.complexity] += 1;
    report.length_histogram[std::string(1, annotation.expected_length)] += 1;
    report.token_length_histogram[whitespace_token_count(
        instruction.flattened_text())] += 1;
  }
  return report;
}

nlohmann::json report_to_json(const DistributionReport& report) {
  nlohmann::json j;
  j["category_histogram"] = report.category_histogram;
  j["complexity_histogram"] = nlohmann::json::object();
  for (const auto& [k, v] : report.complexity_histogram) {
    j["complexity_histogram"][std::to_string(k)] = v;
  }
  j["length_histogram"] = report.length_histogram;
  j["token_length_histogram"] = nlohmann::json::object();
  for (const auto& [k, v] : report.token_length_histogram) {
    j["token_length_histogram"][std::to_string(k)] = v;
  }
  return j;
}

std::string report_to_csv(const DistributionReport& report) {
  std::string out = "histogram,key,count\n";
  auto quote = [](const std::string& s) {
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    q += '"';
    return q;
  };
  for (const auto& [k, v] : report.category_histogram) {
    out += "category," + quote(k) + "," + std::to_string(v) + "\n";
  }
  for (const auto& [k, v] : report.complexity_histogram) {
    out += "complexity," + std::to_string(k) + "," + std::to_string(v) + "\n";
  }
  for (const auto& [k, v] : report.length_histogram) {
    out += "length," + k + "," + std::to_string(v) + "\n";
  }
  for (const auto& [k, v] : report.token_length_histogram) {
    out += "token_length," + std::to_string(k) + "," + std::to_string(v) + "\n";
  }
  return out;
}

}  // namespace judgekit::curation
