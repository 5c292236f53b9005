#pragma once

// Fine-tuning dataset emission. Each record is {prompt, completion}:
// the prompt is the rendered judge conversation and the completion is
// the retained judgment text, so the field split itself encodes which
// region the trainer applies its loss to. Emission is deterministic
// (records sorted by example_id) so manifests hash identically across
// machines.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "judgekit/types.hpp"

namespace judgekit::dataset {

struct Manifest {
  int iteration = 0;
  std::size_t example_count = 0;
  std::map<std::string, std::size_t> label_counts;  // "A" / "B"
  std::string content_hash;

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

void to_json(nlohmann::json& j, const Manifest& v);
void from_json(const nlohmann::json& j, Manifest& v);

void write_manifest(const Manifest& manifest, const std::filesystem::path& path);
Manifest read_manifest(const std::filesystem::path& path);

struct TrainingRecord {
  std::string prompt;
  std::string completion;

  friend bool operator==(const TrainingRecord&, const TrainingRecord&) = default;
};

void to_json(nlohmann::json& j, const TrainingRecord& v);
void from_json(const nlohmann::json& j, TrainingRecord& v);

/// System message, blank line, then the judge user block.
std::string render_training_prompt(const OrderedExample& example,
                                   const std::string& system_prompt);

/// Writes one JSONL record per example (sorted by example_id) and
/// returns the manifest for the emitted file. The completion field is
/// byte-identical to the retained judgment text. An empty system_prompt
/// selects the standard judge system prompt.
Manifest emit_training_file(const std::vector<TrainingExample>& examples,
                            const std::string& system_prompt,
                            const std::filesystem::path& path, int iteration);

/// Key-value training configuration consumed by the external trainer,
/// in flat TOML form; `overrides` replaces default value literals.
void emit_trainer_sidecar(const std::filesystem::path& path,
                          const std::map<std::string, std::string>& overrides = {});

/// Default sidecar entries in emission order (value literals as written).
const std::vector<std::pair<std::string, std::string>>& trainer_defaults();

/// 64-bit content hash (hex) over the file's raw bytes.
std::string file_content_hash(const std::filesystem::path& path);

/// Round-trips an emitted file after verifying its content hash against
/// the manifest.
std::vector<TrainingRecord> load_training_file(const std::filesystem::path& path,
                                               const Manifest& manifest);

}  // namespace judgekit::dataset
