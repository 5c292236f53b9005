#include "judgekit/orchestrator.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "judgekit/annotation.hpp"
#include "judgekit/dataset.hpp"
#include "judgekit/gateway.hpp"
#include "judgekit/jsonl.hpp"
#include "judgekit/rng.hpp"

namespace judgekit::orchestrator {

using nlohmann::json;

// ---------------------------------------------------------------------------
// State

std::string to_string(Status status) {
  switch (status) {
    case Status::annotating: return "annotating";
    case Status::emitted: return "emitted";
    case Status::awaiting_trainer: return "awaiting-trainer";
    case Status::registered: return "registered";
    case Status::evaluated: return "evaluated";
  }
  throw StateError("bad Status value");
}

Status status_from_string(std::string_view s) {
  if (s == "annotating") return Status::annotating;
  if (s == "emitted") return Status::emitted;
  if (s == "awaiting-trainer") return Status::awaiting_trainer;
  if (s == "registered") return Status::registered;
  if (s == "evaluated") return Status::evaluated;
  throw StateError("unknown status: " + std::string(s));
}

void to_json(json& j, const IterationState& v) {
  j = json{{"iteration", v.iteration},
           {"judge_model", v.judge_model},
           {"generator_model", v.generator_model},
           {"dataset_manifest", v.dataset_manifest},
           {"status", to_string(v.status)},
           {"registered_model", v.registered_model},
           {"pool_size", v.pool_size},
           {"retained_count", v.retained_count},
           {"emitted_count", v.emitted_count}};
}

void from_json(const json& j, IterationState& v) {
  v.iteration = j.at("iteration").get<int>();
  v.judge_model = j.at("judge_model").get<std::string>();
  v.generator_model = j.value("generator_model", "");
  v.dataset_manifest = j.value("dataset_manifest", "");
  v.status = status_from_string(j.at("status").get<std::string>());
  v.registered_model = j.value("registered_model", "");
  v.pool_size = j.value("pool_size", std::size_t{0});
  v.retained_count = j.value("retained_count", std::size_t{0});
  v.emitted_count = j.value("emitted_count", std::size_t{0});
}

void to_json(json& j, const PipelineState& v) {
  j = json{{"iterations", v.iterations}};
}

void from_json(const json& j, PipelineState& v) {
  v.iterations = j.at("iterations").get<std::vector<IterationState>>();
  int expected = 0;
  for (const auto& it : v.iterations) {
    if (it.iteration != expected++) {
      throw StateError("iteration numbers are not contiguous from 0");
    }
  }
}

namespace {

std::filesystem::path state_file(const std::filesystem::path& state_dir) {
  return state_dir / "state.json";
}

}  // namespace

PipelineState load_state(const std::filesystem::path& state_dir) {
  const auto path = state_file(state_dir);
  if (!std::filesystem::exists(path)) {
    return {};
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw StateError("cannot open state file " + path.string());
  }
  try {
    return json::parse(in).get<PipelineState>();
  } catch (const json::exception& e) {
    throw StateError("corrupt state file " + path.string() + ": " + e.what());
  }
}

void save_state(const std::filesystem::path& state_dir,
                const PipelineState& state) {
  std::filesystem::create_directories(state_dir);
  const auto path = state_file(state_dir);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw StateError("cannot write state to " + tmp);
    }
    out << json(state).dump(2) << '\n';
    out.flush();
    if (!out) {
      throw StateError("state write failed for " + tmp);
    }
  }
  std::filesystem::rename(tmp, path);
}

StateLock::StateLock(const std::filesystem::path& state_dir) {
  std::filesystem::create_directories(state_dir);
  const auto path = state_dir / "lock";
  fd_ = ::open(path.c_str(), O_CREAT | O_RDWR, 0644);
  if (fd_ < 0) {
    throw StateError("cannot open lock file " + path.string());
  }
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw StateError("state directory " + state_dir.string() +
                     " is locked by another orchestrator");
  }
}

StateLock::~StateLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

// ---------------------------------------------------------------------------
// Iterations

namespace {

int target_iteration(const PipelineState& state) {
  if (state.iterations.empty()) return 0;
  const auto& last = state.iterations.back();
  if (last.status == Status::registered || last.status == Status::evaluated) {
    return last.iteration + 1;
  }
  return last.iteration;  // resume / idempotent re-run
}

std::string judge_model_for(const PipelineState& state, const Config& config,
                            int iteration) {
  if (iteration == 0) {
    if (config.seed_judge_model.empty()) {
      throw ConfigError("seed judge model is not configured");
    }
    return config.seed_judge_model;
  }
  const auto& prev = state.iterations.at(static_cast<std::size_t>(iteration - 1));
  if (prev.registered_model.empty()) {
    throw StateError("iteration " + std::to_string(iteration - 1) +
                     " has no registered model");
  }
  return prev.registered_model;
}

std::shared_ptr<llm::Backend> make_backend(const Config& config,
                                           const std::vector<OrderedExample>& pool) {
  if (config.backend == "mock") {
    auto gold = annotation::judge_prompt_gold_map(pool);
    return std::make_shared<llm::MockBackend>(llm::simulated_judge_handler(
        std::move(gold), config.mock_judge_accuracy, config.mock_seed));
  }
  if (config.backend == "http") {
    llm::HttpBackendConfig http;
    http.base_url = config.base_url;
    http.path = config.api_path;
    http.max_attempts = config.max_attempts;
    if (const char* key = std::getenv(config.api_key_env.c_str())) {
      http.api_key = key;
    }
    if (http.base_url.empty()) {
      throw ConfigError("http backend requires a base URL");
    }
    return std::shared_ptr<llm::Backend>(llm::make_http_backend(std::move(http)));
  }
  throw ConfigError("unknown backend: " + config.backend);
}

IterationState& upsert_iteration(PipelineState& state, int iteration) {
  for (auto& it : state.iterations) {
    if (it.iteration == iteration) return it;
  }
  IterationState fresh;
  fresh.iteration = iteration;
  state.iterations.push_back(fresh);
  return state.iterations.back();
}

}  // namespace

IterationState run_iteration(const std::filesystem::path& state_dir,
                             const Config& config) {
  StateLock lock(state_dir);
  PipelineState state = load_state(state_dir);
  const int iteration = target_iteration(state);
  const std::string judge_model = judge_model_for(state, config, iteration);

  {
    // Persist the in-progress marker before any network work so an
    // interrupted run is visible in status output.
    IterationState& entry = upsert_iteration(state, iteration);
    if (entry.status == Status::annotating) {
      entry.judge_model = judge_model;
      entry.generator_model = config.generator_model;
      save_state(state_dir, state);
    } else if (entry.judge_model != judge_model) {
      throw StateError("iteration " + std::to_string(iteration) +
                       " was annotated by " + entry.judge_model +
                       "; refusing to re-run with " + judge_model);
    }
  }

  if (config.ordered_examples_path.empty()) {
    throw ConfigError("ordered example pool path is not configured");
  }
  auto pool = jsonl::read_file<OrderedExample>(config.ordered_examples_path);
  if (pool.empty()) {
    throw EmptyIterationError("ordered example pool " +
                              config.ordered_examples_path + " is empty");
  }
  {
    std::unordered_set<std::string> ids;
    for (const auto& example : pool) {
      if (!ids.insert(example.example_id).second) {
        throw ValidationError("duplicate example_id in pool: " +
                              example.example_id);
      }
    }
  }

  llm::GatewayConfig gateway_config;
  gateway_config.parallelism = config.parallelism;
  gateway_config.cache_path = config.cache_path.empty()
                                  ? (state_dir / "gateway_cache.jsonl").string()
                                  : config.cache_path;
  llm::Gateway gateway(make_backend(config, pool), gateway_config);

  const std::uint64_t iter_seed =
      rng::mix(config.seed, static_cast<std::uint64_t>(iteration));
  auto annotated =
      annotation::annotate_pool(gateway, pool, judge_model,
                                config.judgment_samples,
                                config.judgment_sampling, iter_seed, iteration);
  if (annotated.examples.empty()) {
    throw EmptyIterationError("iteration " + std::to_string(iteration) +
                              " retained zero examples from a pool of " +
                              std::to_string(pool.size()));
  }
  auto balanced = annotation::balance(std::move(annotated.examples), iter_seed);
  if (balanced.empty()) {
    throw EmptyIterationError("iteration " + std::to_string(iteration) +
                              " is empty after label balancing");
  }

  const std::string iter_dir_name = "iter_" + std::to_string(iteration);
  const auto iter_dir = state_dir / iter_dir_name;
  auto manifest = dataset::emit_training_file(balanced, "",
                                              iter_dir / "train.jsonl", iteration);
  dataset::write_manifest(manifest, iter_dir / "manifest.json");
  dataset::emit_trainer_sidecar(iter_dir / "trainer_sidecar.toml");
  jsonl::write_file(iter_dir / "training_examples.jsonl", balanced);

  IterationState& entry = upsert_iteration(state, iteration);
  entry.judge_model = judge_model;
  entry.generator_model = config.generator_model;
  entry.dataset_manifest = iter_dir_name + "/manifest.json";
  if (entry.status == Status::annotating || entry.status == Status::emitted) {
    entry.status = Status::awaiting_trainer;  // never regress a later status
  }
  entry.pool_size = annotated.stats.total;
  entry.retained_count = annotated.stats.retained;
  entry.emitted_count = balanced.size();
  save_state(state_dir, state);
  return entry;
}

IterationState register_model(const std::filesystem::path& state_dir,
                              int iteration, const std::string& model_id) {
  if (model_id.empty()) {
    throw ConfigError("model id must be non-empty");
  }
  StateLock lock(state_dir);
  PipelineState state = load_state(state_dir);
  for (auto& entry : state.iterations) {
    if (entry.iteration != iteration) continue;
    if (entry.status != Status::awaiting_trainer) {
      throw StateError("iteration " + std::to_string(iteration) + " is " +
                       to_string(entry.status) + ", not awaiting-trainer");
    }
    entry.registered_model = model_id;
    entry.status = Status::registered;
    save_state(state_dir, state);
    return entry;
  }
  throw StateError("unknown iteration " + std::to_string(iteration));
}

IterationState mark_evaluated(const std::filesystem::path& state_dir,
                              int iteration) {
  StateLock lock(state_dir);
  PipelineState state = load_state(state_dir);
  for (auto& entry : state.iterations) {
    if (entry.iteration != iteration) continue;
    if (entry.status != Status::registered) {
      throw StateError("iteration " + std::to_string(iteration) + " is " +
                       to_string(entry.status) + ", not registered");
    }
    entry.status = Status::evaluated;
    save_state(state_dir, state);
    return entry;
  }
  throw StateError("unknown iteration " + std::to_string(iteration));
}

std::string status(const std::filesystem::path& state_dir) {
  PipelineState state = load_state(state_dir);
  if (state.iterations.empty()) {
    return "iteration 0: not started\n";
  }
  std::ostringstream out;
  for (const auto& entry : state.iterations) {
    out << "iteration " << entry.iteration << ": " << to_string(entry.status);
    out << "  judge=" << entry.judge_model;
    if (entry.pool_size > 0) {
      const double retention = 100.0 * static_cast<double>(entry.retained_count) /
                               static_cast<double>(entry.pool_size);
      out.setf(std::ios::fixed);
      out.precision(1);
      out << "  emitted=" << entry.emitted_count << " (pool " << entry.pool_size
          << ", retention " << retention << "%)";
    }
    if (!entry.dataset_manifest.empty()) {
      try {
        auto manifest = dataset::read_manifest(state_dir / entry.dataset_manifest);
        out << "  labels A:" << manifest.label_counts["A"]
            << " B:" << manifest.label_counts["B"];
      } catch (const IoError&) {
        // manifest missing or unreadable; stored counts already shown
      }
    }
    if (!entry.registered_model.empty()) {
      out << "  model=" << entry.registered_model;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace judgekit::orchestrator
