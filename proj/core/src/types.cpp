#include "judgekit/types.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "judgekit/jsonl.hpp"

namespace judgekit {

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Roles and turns

std::string to_string(Role role) {
  return role == Role::user ? "user" : "assistant";
}

Role role_from_string(std::string_view s) {
  if (s == "user") return Role::user;
  if (s == "assistant") return Role::assistant;
  throw ValidationError("unknown turn role: " + std::string(s));
}

// ---------------------------------------------------------------------------
// Instruction

Instruction Instruction::single(std::string id, std::string text,
                                std::string source) {
  Instruction instruction{std::move(id),
                          {Turn{Role::user, std::move(text)}},
                          std::move(source)};
  validate(instruction);
  return instruction;
}

const std::string& Instruction::last_user_text() const {
  return turns.back().text;
}

std::string Instruction::flattened_text() const {
  if (turns.size() == 1) {
    return turns.front().text;
  }
  std::string out;
  for (std::size_t i = 0; i < turns.size(); ++i) {
    if (i > 0) out += '\n';
    out += to_string(turns[i].role);
    out += ": ";
    out += turns[i].text;
  }
  return out;
}

void validate(const Instruction& instruction) {
  if (instruction.id.empty()) {
    throw ValidationError("instruction id must be non-empty");
  }
  if (instruction.turns.empty()) {
    throw ValidationError("instruction " + instruction.id + " has no turns");
  }
  if (instruction.turns.back().role != Role::user) {
    throw ValidationError("instruction " + instruction.id +
                          ": last turn must be from the user");
  }
}

std::vector<Instruction> load_instruction_pool(
    const std::filesystem::path& path) {
  auto pool = jsonl::read_file<Instruction>(path);
  std::unordered_set<std::string> ids;
  for (const auto& instruction : pool) {
    if (!ids.insert(instruction.id).second) {
      throw ValidationError("duplicate instruction id in pool: " +
                            instruction.id);
    }
  }
  return pool;
}

// ---------------------------------------------------------------------------
// Categories

const std::array<std::string_view, kCategoryCount>& category_names() {
  static const std::array<std::string_view, kCategoryCount> names = {
      "Coding",
      "Mathematical reasoning",
      "Asking for Advice",
      "Brainstorming",
      "Classification",
      "Closed Question Answering",
      "Creative Writing",
      "Extraction",
      "Inhabiting a Character/Persona",
      "Open Question Answering",
      "Rewriting",
      "Summarization",
      "Knowledge and Reasoning",
      "Humanity, History or Social Studies",
      "Other",
  };
  return names;
}

std::string to_string(Category category) {
  return std::string(category_names()[static_cast<std::size_t>(category)]);
}

std::optional<Category> category_from_string(std::string_view name) {
  const std::string needle = lowercase(name);
  const auto& names = category_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (lowercase(names[i]) == needle) {
      return static_cast<Category>(i);
    }
  }
  return std::nullopt;
}

void validate(const CategoryAnnotation& annotation) {
  if (annotation.complexity < 1) {
    throw ValidationError("complexity must be a positive integer");
  }
  if (annotation.expected_length < 'a' || annotation.expected_length > 'e') {
    throw ValidationError("expected_length must be one of a-e");
  }
}

// ---------------------------------------------------------------------------
// Response pairs

std::string to_string(PairMethod method) {
  switch (method) {
    case PairMethod::noisy_instruction: return "noisy-instruction";
    case PairMethod::degraded_response: return "degraded-response";
    case PairMethod::external_labeled: return "external-labeled";
    case PairMethod::correctness_paired: return "correctness-paired";
  }
  throw ValidationError("bad PairMethod value");
}

PairMethod pair_method_from_string(std::string_view s) {
  if (s == "noisy-instruction") return PairMethod::noisy_instruction;
  if (s == "degraded-response") return PairMethod::degraded_response;
  if (s == "external-labeled") return PairMethod::external_labeled;
  if (s == "correctness-paired") return PairMethod::correctness_paired;
  throw ValidationError("unknown pair method: " + std::string(s));
}

void validate(const ResponsePair& pair) {
  if (pair.instruction_id.empty()) {
    throw ValidationError("response pair has empty instruction_id");
  }
  if (pair.chosen == pair.rejected) {
    throw ValidationError("pair for " + pair.instruction_id +
                          ": chosen and rejected responses are identical");
  }
  const bool noisy = pair.method == PairMethod::noisy_instruction;
  if (noisy != pair.modified_instruction.has_value()) {
    throw ValidationError(
        "pair for " + pair.instruction_id +
        ": modified_instruction must be present exactly for the "
        "noisy-instruction method");
  }
}

// ---------------------------------------------------------------------------
// Verdicts and examples

std::string to_string(Verdict v) { return v == Verdict::A ? "A" : "B"; }

Verdict verdict_from_string(std::string_view s) {
  if (s == "A") return Verdict::A;
  if (s == "B") return Verdict::B;
  throw ValidationError("unknown verdict: " + std::string(s));
}

void validate(const OrderedExample& example) {
  if (example.example_id.empty()) {
    throw ValidationError("ordered example has empty example_id");
  }
  validate(example.instruction);
  if (example.response_a == example.response_b) {
    throw ValidationError("example " + example.example_id +
                          ": responses A and B are identical");
  }
}

void validate(const TrainingExample& example) {
  validate(example.ordered);
  if (!example.judgment.verdict.has_value()) {
    throw ValidationError("training example " + example.ordered.example_id +
                          ": judgment has no parsed verdict");
  }
  if (*example.judgment.verdict != example.ordered.gold) {
    throw ValidationError("training example " + example.ordered.example_id +
                          ": judgment verdict disagrees with gold");
  }
  if (example.iteration < 0) {
    throw ValidationError("training example iteration must be >= 0");
  }
}

// ---------------------------------------------------------------------------
// Sampling

SamplingParams SamplingParams::with_n(int count) const {
  return make_sampling(temperature, top_p, count);
}

SamplingParams make_sampling(double temperature, double top_p, int n) {
  SamplingParams params{temperature, top_p, temperature == 0.0 ? 1 : n};
  validate(params);
  return params;
}

void validate(const SamplingParams& params) {
  if (params.temperature < 0.0) {
    throw ValidationError("temperature must be non-negative");
  }
  if (!(params.top_p > 0.0) || params.top_p > 1.0) {
    throw ValidationError("top_p must be in (0, 1]");
  }
  if (params.n < 1) {
    throw ValidationError("sample count n must be >= 1");
  }
  if (params.temperature == 0.0 && params.n != 1) {
    throw ValidationError("temperature 0 implies a single sample");
  }
}

// ---------------------------------------------------------------------------
// JSON bindings

using nlohmann::json;

void to_json(json& j, const Turn& v) {
  j = json{{"role", to_string(v.role)}, {"text", v.text}};
}

void from_json(const json& j, Turn& v) {
  v.role = role_from_string(j.at("role").get<std::string>());
  v.text = j.at("text").get<std::string>();
}

void to_json(json& j, const Instruction& v) {
  j = json{{"id", v.id}, {"turns", v.turns}, {"source", v.source}};
}

void from_json(const json& j, Instruction& v) {
  v.id = j.at("id").get<std::string>();
  v.turns = j.at("turns").get<std::vector<Turn>>();
  v.source = j.value("source", "");
  validate(v);
}

void to_json(json& j, const CategoryAnnotation& v) {
  j = json{{"category", to_string(v.category)},
           {"complexity", v.complexity},
           {"expected_length", std::string(1, v.expected_length)}};
}

void from_json(const json& j, CategoryAnnotation& v) {
  auto name = j.at("category").get<std::string>();
  auto category = category_from_string(name);
  if (!category) {
    throw ValidationError("unknown category: " + name);
  }
  v.category = *category;
  v.complexity = j.at("complexity").get<int>();
  auto length = j.at("expected_length").get<std::string>();
  if (length.size() != 1) {
    throw ValidationError("expected_length must be a single letter a-e");
  }
  v.expected_length = length[0];
  validate(v);
}

void to_json(json& j, const ResponsePair& v) {
  j = json{{"instruction_id", v.instruction_id},
           {"chosen", v.chosen},
           {"rejected", v.rejected},
           {"method", to_string(v.method)},
           {"generator_model", v.generator_model}};
  if (v.modified_instruction) {
    j["modified_instruction"] = *v.modified_instruction;
  }
}

void from_json(const json& j, ResponsePair& v) {
  v.instruction_id = j.at("instruction_id").get<std::string>();
  v.chosen = j.at("chosen").get<std::string>();
  v.rejected = j.at("rejected").get<std::string>();
  v.method = pair_method_from_string(j.at("method").get<std::string>());
  v.generator_model = j.value("generator_model", "");
  if (j.contains("modified_instruction")) {
    v.modified_instruction = j.at("modified_instruction").get<std::string>();
  } else {
    v.modified_instruction.reset();
  }
  validate(v);
}

void to_json(json& j, const OrderedExample& v) {
  j = json{{"example_id", v.example_id},
           {"instruction", v.instruction},
           {"response_a", v.response_a},
           {"response_b", v.response_b},
           {"gold", to_string(v.gold)},
           {"order_seed", v.order_seed}};
}

void from_json(const json& j, OrderedExample& v) {
  v.example_id = j.at("example_id").get<std::string>();
  v.instruction = j.at("instruction").get<Instruction>();
  v.response_a = j.at("response_a").get<std::string>();
  v.response_b = j.at("response_b").get<std::string>();
  v.gold = verdict_from_string(j.at("gold").get<std::string>());
  v.order_seed = j.value("order_seed", std::int64_t{0});
  validate(v);
}

void to_json(json& j, const JudgmentSample& v) {
  j = json{{"raw", v.raw}, {"sample_index", v.sample_index}};
  if (v.verdict) {
    j["verdict"] = to_string(*v.verdict);
  }
}

void from_json(const json& j, JudgmentSample& v) {
  v.raw = j.at("raw").get<std::string>();
  v.sample_index = j.value("sample_index", 0);
  if (j.contains("verdict")) {
    v.verdict = verdict_from_string(j.at("verdict").get<std::string>());
  } else {
    v.verdict.reset();
  }
}

void to_json(json& j, const TrainingExample& v) {
  j = json{{"ordered", v.ordered},
           {"judgment", v.judgment},
           {"iteration", v.iteration}};
}

void from_json(const json& j, TrainingExample& v) {
  v.ordered = j.at("ordered").get<OrderedExample>();
  v.judgment = j.at("judgment").get<JudgmentSample>();
  v.iteration = j.value("iteration", 0);
  validate(v);
}

void to_json(json& j, const SamplingParams& v) {
  j = json{{"temperature", v.temperature}, {"top_p", v.top_p}, {"n", v.n}};
}

void from_json(const json& j, SamplingParams& v) {
  v = make_sampling(j.at("temperature").get<double>(),
                    j.at("top_p").get<double>(), j.at("n").get<int>());
}

}  // namespace judgekit
