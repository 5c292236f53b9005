#pragma once

// Iteration state machine tying annotation -> dataset emission ->
// (external training) -> model registration across iterations. Training
// itself is out of process: an iteration blocks at awaiting-trainer
// until the externally fine-tuned model is registered back. State lives
// in a single JSON file with write-rename atomicity; one orchestrator
// per state directory is enforced with an advisory lock file.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "judgekit/types.hpp"

namespace judgekit::orchestrator {

enum class Status {
  annotating,
  emitted,
  awaiting_trainer,
  registered,
  evaluated,
};

std::string to_string(Status status);
Status status_from_string(std::string_view s);

struct IterationState {
  int iteration = 0;
  /// Judge that annotated this iteration's data (the previous
  /// iteration's registered model; the configured seed judge for
  /// iteration 0).
  std::string judge_model;
  std::string generator_model;
  /// Manifest path relative to the state directory.
  std::string dataset_manifest;
  Status status = Status::annotating;
  /// Model trained on this iteration's dataset, once registered.
  std::string registered_model;
  std::size_t pool_size = 0;
  std::size_t retained_count = 0;  // survivors of rejection filtering
  std::size_t emitted_count = 0;   // after label balancing

  friend bool operator==(const IterationState&,
                         const IterationState&) = default;
};

void to_json(nlohmann::json& j, const IterationState& v);
void from_json(const nlohmann::json& j, IterationState& v);

struct PipelineState {
  std::vector<IterationState> iterations;
};

void to_json(nlohmann::json& j, const PipelineState& v);
void from_json(const nlohmann::json& j, PipelineState& v);

PipelineState load_state(const std::filesystem::path& state_dir);
void save_state(const std::filesystem::path& state_dir,
                const PipelineState& state);

/// Advisory exclusive lock on a state directory (flock on state_dir/lock,
/// released on destruction or process exit).
class StateLock {
 public:
  explicit StateLock(const std::filesystem::path& state_dir);
  ~StateLock();
  StateLock(const StateLock&) = delete;
  StateLock& operator=(const StateLock&) = delete;

 private:
  int fd_ = -1;
};

struct Config {
  // gateway
  std::string backend = "mock";  // "http" | "mock"
  std::string base_url;
  std::string api_key_env = "JUDGEKIT_API_KEY";
  std::string api_path = "/v1/chat/completions";
  int max_attempts = 3;
  int parallelism = 8;
  /// Defaults to <state_dir>/gateway_cache.jsonl.
  std::string cache_path;

  // models
  std::string seed_judge_model;  // judge for iteration 0
  std::string generator_model;

  // data
  std::string ordered_examples_path;
  /// Pairs are constructed once and pinned across iterations; each
  /// iteration re-annotates the full pool with its judge.
  bool freeze_pairs = true;

  // annotation
  int judgment_samples = kDefaultJudgmentSamples;
  SamplingParams judgment_sampling = sampling_presets::generation();
  std::uint64_t seed = 0;

  // mock backend
  double mock_judge_accuracy = 0.9;
  std::uint64_t mock_seed = 0;
};

/// Annotates the pool with the current judge, rejection-filters,
/// balances, and emits iter_<k>/{train.jsonl, manifest.json,
/// trainer_sidecar.toml, training_examples.jsonl}. Re-running an
/// incomplete or awaiting iteration reproduces identical artifacts via
/// the gateway cache. Throws EmptyIterationError when nothing survives.
IterationState run_iteration(const std::filesystem::path& state_dir,
                             const Config& config);

/// Binds the externally fine-tuned model back into the loop; only legal
/// while the iteration is awaiting-trainer.
IterationState register_model(const std::filesystem::path& state_dir,
                              int iteration, const std::string& model_id);

/// Marks a registered iteration as evaluated.
IterationState mark_evaluated(const std::filesystem::path& state_dir,
                              int iteration);

/// Human-readable summary of iterations, statuses, dataset sizes and
/// retention rates.
std::string status(const std::filesystem::path& state_dir);

}  // namespace judgekit::orchestrator
