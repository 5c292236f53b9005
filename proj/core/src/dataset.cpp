#include "judgekit/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "judgekit/annotation.hpp"
#include "judgekit/jsonl.hpp"
#include "judgekit/rng.hpp"

namespace judgekit::dataset {

using nlohmann::json;

void to_json(json& j, const Manifest& v) {
  j = json{{"iteration", v.iteration},
           {"example_count", v.example_count},
           {"label_counts", v.label_counts},
           {"content_hash", v.content_hash}};
}

void from_json(const json& j, Manifest& v) {
  v.iteration = j.at("iteration").get<int>();
  v.example_count = j.at("example_count").get<std::size_t>();
  v.label_counts = j.at("label_counts").get<std::map<std::string, std::size_t>>();
  v.content_hash = j.at("content_hash").get<std::string>();
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot write manifest " + path.string());
  }
  out << json(manifest).dump(2) << '\n';
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open manifest " + path.string());
  }
  try {
    return json::parse(in).get<Manifest>();
  } catch (const json::exception& e) {
    throw IoError("corrupt manifest " + path.string() + ": " + e.what());
  }
}

void to_json(json& j, const TrainingRecord& v) {
  j = json{{"prompt", v.prompt}, {"completion", v.completion}};
}

void from_json(const json& j, TrainingRecord& v) {
  v.prompt = j.at("prompt").get<std::string>();
  v.completion = j.at("completion").get<std::string>();
}

std::string render_training_prompt(const OrderedExample& example,
                                   const std::string& system_prompt) {
  auto prompt = annotation::render_judge_prompt(example);
  const std::string& system =
      system_prompt.empty() ? annotation::kJudgeSystemPrompt : system_prompt;
  return system + "\n\n" + prompt.user;
}

Manifest emit_training_file(const std::vector<TrainingExample>& examples,
                            const std::string& system_prompt,
                            const std::filesystem::path& path, int iteration) {
  for (const auto& example : examples) {
    validate(example);
  }

  std::vector<const TrainingExample*> ordered;
  ordered.reserve(examples.size());
  for (const auto& example : examples) {
    ordered.push_back(&example);
  }
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const TrainingExample* a, const TrainingExample* b) {
                     return a->ordered.example_id < b->ordered.example_id;
                   });

  std::string content;
  Manifest manifest;
  manifest.iteration = iteration;
  manifest.example_count = examples.size();
  manifest.label_counts = {{"A", 0}, {"B", 0}};
  for (const TrainingExample* example : ordered) {
    TrainingRecord record{
        render_training_prompt(example->ordered, system_prompt),
        example->judgment.raw};
    content += jsonl::dump_line(json(record));
    content += '\n';
    manifest.label_counts[to_string(example->ordered.gold)] += 1;
  }
  manifest.content_hash = rng::to_hex(rng::fnv1a64(content));

  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot write training file " + path.string());
  }
  out << content;
  out.flush();
  if (!out) {
    throw IoError("write failed for " + path.string());
  }
  return manifest;
}

const std::vector<std::pair<std::string, std::string>>& trainer_defaults() {
  static const std::vector<std::pair<std::string, std::string>> defaults = {
      {"max_seq_len", "4096"},
      {"max_num_tokens", "8192"},
      {"model", "\"llama3_70b_instruct\""},
      {"dtype", "\"bfloat16\""},
      {"data_parallelism", "\"fsdp\""},
      {"tensor_parallel_size", "8"},
      {"activation_checkpointing", "true"},
      {"lr", "1.0e-06"},
      {"betas", "\"0.9, 0.95\""},
      {"final_lr_ratio", "0.2"},
      {"weight_decay", "0.1"},
      {"num_lr_warmup_steps", "100"},
      {"gradient_accumulation", "1"},
      {"max_num_data_epochs", "2"},
      {"checkpoint_every_n_steps", "100"},
      {"seed", "2"},
  };
  return defaults;
}

void emit_trainer_sidecar(const std::filesystem::path& path,
                          const std::map<std::string, std::string>& overrides) {
  for (const auto& [key, value] : overrides) {
    (void)value;
    const auto& defaults = trainer_defaults();
    const bool known =
        std::any_of(defaults.begin(), defaults.end(),
                    [&](const auto& entry) { return entry.first == key; });
    if (!known) {
      throw ConfigError("unknown trainer sidecar key: " + key);
    }
  }

  std::ostringstream out;
  out << "# Trainer contract: initialize from the seed model at each "
         "iteration.\n";
  for (const auto& [key, default_value] : trainer_defaults()) {
    auto it = overrides.find(key);
    out << key << " = " << (it != overrides.end() ? it->second : default_value)
        << '\n';
  }

  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) {
    throw IoError("cannot write trainer sidecar " + path.string());
  }
  file << out.str();
}

std::string file_content_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return rng::to_hex(rng::fnv1a64(buffer.str()));
}

std::vector<TrainingRecord> load_training_file(const std::filesystem::path& path,
                                               const Manifest& manifest) {
  const std::string actual = file_content_hash(path);
  if (actual != manifest.content_hash) {
    throw IoError("content hash mismatch for " + path.string() + ": manifest " +
                  manifest.content_hash + ", file " + actual);
  }
  auto records = jsonl::read_file<TrainingRecord>(path);
  if (records.size() != manifest.example_count) {
    throw IoError("record count mismatch for " + path.string());
  }
  return records;
}

}  // namespace judgekit::dataset
