// judgekit CLI: pipeline stages as subcommands plus the iteration state
// machine. Exit codes: 0 success, 2 configuration error, 3 upstream
// endpoint failure, 4 state violation.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "judgekit/annotation.hpp"
#include "judgekit/curation.hpp"
#include "judgekit/dataset.hpp"
#include "judgekit/evaluation.hpp"
#include "judgekit/gateway.hpp"
#include "judgekit/jsonl.hpp"
#include "judgekit/orchestrator.hpp"
#include "judgekit/synthesis.hpp"
#include "judgekit/types.hpp"

namespace {

using namespace judgekit;

struct GatewayCliOptions {
  std::string backend = "mock";
  std::string base_url;
  std::string api_key_env = "JUDGEKIT_API_KEY";
  std::string api_path = "/v1/chat/completions";
  int max_attempts = 3;
  int parallelism = 8;
  std::string cache_path;
  double mock_judge_accuracy = 0.9;
  std::uint64_t mock_seed = 0;
};

void add_gateway_options(CLI::App* cmd, GatewayCliOptions& opts) {
  cmd->add_option("--backend", opts.backend, "Endpoint backend")
      ->check(CLI::IsMember({"http", "mock"}))
      ->capture_default_str();
  cmd->add_option("--base-url", opts.base_url,
                  "Chat-completion endpoint base URL (http backend)");
  cmd->add_option("--api-key-env", opts.api_key_env,
                  "Environment variable holding the API key")
      ->capture_default_str();
  cmd->add_option("--api-path", opts.api_path, "Endpoint request path")
      ->capture_default_str();
  cmd->add_option("--retries", opts.max_attempts,
                  "Maximum endpoint attempts per request")
      ->capture_default_str();
  cmd->add_option("--parallelism", opts.parallelism,
                  "Bounded request concurrency")
      ->capture_default_str();
  cmd->add_option("--cache", opts.cache_path,
                  "Response cache file (JSONL, append-only)");
  cmd->add_option("--mock-judge-accuracy", opts.mock_judge_accuracy,
                  "Per-sample accuracy of the simulated judge (mock backend)")
      ->capture_default_str();
  cmd->add_option("--mock-seed", opts.mock_seed,
                  "Seed for the mock backend's deterministic streams")
      ->capture_default_str();
}

std::shared_ptr<llm::Backend> make_http_backend_from(const GatewayCliOptions& opts) {
  llm::HttpBackendConfig http;
  http.base_url = opts.base_url;
  http.path = opts.api_path;
  http.max_attempts = opts.max_attempts;
  if (const char* key = std::getenv(opts.api_key_env.c_str())) {
    http.api_key = key;
  }
  if (http.base_url.empty()) {
    throw ConfigError("--backend http requires --base-url");
  }
  return std::shared_ptr<llm::Backend>(llm::make_http_backend(std::move(http)));
}

/// Gateway whose mock mode answers generator-side prompts.
llm::Gateway make_generator_gateway(const GatewayCliOptions& opts) {
  std::shared_ptr<llm::Backend> backend =
      opts.backend == "mock"
          ? std::make_shared<llm::MockBackend>(
                llm::canned_generator_handler(opts.mock_seed))
          : make_http_backend_from(opts);
  return llm::Gateway(std::move(backend),
                      llm::GatewayConfig{opts.cache_path, opts.parallelism});
}

/// Gateway whose mock mode simulates a judge over the given pool's gold.
llm::Gateway make_judge_gateway(const GatewayCliOptions& opts,
                                const std::vector<OrderedExample>& pool,
                                bool include_swapped) {
  std::shared_ptr<llm::Backend> backend =
      opts.backend == "mock"
          ? std::make_shared<llm::MockBackend>(llm::simulated_judge_handler(
                annotation::judge_prompt_gold_map(pool, include_swapped),
                opts.mock_judge_accuracy, opts.mock_seed))
          : make_http_backend_from(opts);
  return llm::Gateway(std::move(backend),
                      llm::GatewayConfig{opts.cache_path, opts.parallelism});
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  out << text;
}

// ---------------------------------------------------------------------------
// curate

struct CurateOptions {
  GatewayCliOptions gateway;
  std::string pool_path;
  std::string out_path = "selected.jsonl";
  std::string annotated_out;
  std::string report_path;
  std::string report_csv_path;
  std::vector<std::string> categories;
  std::string model = "mock-categorizer";
  std::optional<std::size_t> max_count;
  int min_complexity = 0;
  std::uint64_t seed = 0;
  bool no_dedupe = false;
  std::size_t max_tokens = 3000;
};

void run_curate(const CurateOptions& opts) {
  auto pool = load_instruction_pool(opts.pool_path);
  auto gateway = make_generator_gateway(opts.gateway);
  auto categorized = curation::categorize_pool(gateway, pool, opts.model);

  curation::SelectionFilter filter;
  if (!opts.categories.empty()) {
    filter.allowed_categories.clear();
    for (const auto& name : opts.categories) {
      auto category = category_from_string(name);
      if (!category) {
        throw ConfigError("unknown category: " + name);
      }
      filter.allowed_categories.push_back(*category);
    }
  }
  filter.max_count = opts.max_count;
  filter.min_complexity = opts.min_complexity;
  filter.dedupe = !opts.no_dedupe;
  filter.seed = opts.seed;
  filter.max_whitespace_tokens = opts.max_tokens;

  auto selected = curation::select_instructions(categorized.annotated, filter);
  jsonl::write_file(opts.out_path, selected);

  if (!opts.annotated_out.empty()) {
    jsonl::write_file(opts.annotated_out, categorized.annotated);
  }
  if (!opts.report_path.empty() || !opts.report_csv_path.empty()) {
    auto report = curation::distribution_report(categorized.annotated);
    if (!opts.report_path.empty()) {
      write_text(opts.report_path, curation::report_to_json(report).dump(2) + "\n");
    }
    if (!opts.report_csv_path.empty()) {
      write_text(opts.report_csv_path, curation::report_to_csv(report));
    }
  }

  std::cout << "pool: " << pool.size()
            << "  categorized: " << categorized.annotated.size()
            << "  dropped: " << categorized.dropped_ids.size()
            << "  selected: " << selected.size() << "\n";
  std::cout << "wrote " << opts.out_path << "\n";
}

// ---------------------------------------------------------------------------
// synthesize

struct SynthesizeOptions {
  GatewayCliOptions gateway;
  std::string in_path;
  std::string method = "noisy-instruction";
  std::string model = "mock-generator";
  std::uint64_t seed = 0;
  std::string pairs_out;
  std::string out_path = "ordered_examples.jsonl";
  double temperature = 0.7;
  double top_p = 0.9;
};

void run_synthesize(const SynthesizeOptions& opts) {
  auto instructions = load_instruction_pool(opts.in_path);
  auto gateway = make_generator_gateway(opts.gateway);

  synthesis::BuildOptions build;
  build.model = opts.model;
  build.sampling = make_sampling(opts.temperature, opts.top_p, 1);

  auto batch = synthesis::build_pairs(gateway, instructions,
                                      pair_method_from_string(opts.method), build);
  auto ordered = synthesis::assemble_all(batch, opts.seed);

  if (!opts.pairs_out.empty()) {
    std::vector<ResponsePair> pairs;
    pairs.reserve(batch.pairs.size());
    for (const auto& [instruction, pair] : batch.pairs) {
      pairs.push_back(pair);
    }
    jsonl::write_file(opts.pairs_out, pairs);
  }
  jsonl::write_file(opts.out_path, ordered);

  std::cout << "instructions: " << instructions.size()
            << "  pairs: " << batch.pairs.size()
            << "  failed: " << batch.failed_ids.size() << "\n";
  for (const auto& id : batch.failed_ids) {
    std::cerr << "pair construction failed for instruction " << id << "\n";
  }
  std::cout << "wrote " << opts.out_path << "\n";
}

// ---------------------------------------------------------------------------
// annotate

struct AnnotateOptions {
  GatewayCliOptions gateway;
  std::string in_path;
  std::string adapter = "none";
  std::string model = "mock-judge";
  int n = kDefaultJudgmentSamples;
  std::uint64_t seed = 0;
  int iteration = 0;
  bool no_balance = false;
  std::string out_path = "training_examples.jsonl";
};

std::vector<OrderedExample> adapt_input(const AnnotateOptions& opts) {
  if (opts.adapter == "none") {
    return jsonl::read_file<OrderedExample>(opts.in_path);
  }
  std::vector<OrderedExample> ordered;
  if (opts.adapter == "helpsteer2") {
    for (const auto& record :
         jsonl::read_file<annotation::HelpSteerRecord>(opts.in_path)) {
      if (auto pair = annotation::helpsteer_pair(record)) {
        ordered.push_back(synthesis::assemble_ordered_example(
            record.instruction, *pair, opts.seed));
      }
    }
  } else if (opts.adapter == "gsm8k") {
    for (const auto& record :
         jsonl::read_file<annotation::SolutionRecord>(opts.in_path)) {
      if (auto pair = annotation::correctness_pairing(
              record.instruction, record.solutions, record.gold_answer)) {
        ordered.push_back(synthesis::assemble_ordered_example(
            record.instruction, *pair, opts.seed));
      }
    }
  } else if (opts.adapter == "external") {
    for (const auto& record :
         jsonl::read_file<annotation::ExternalRecord>(opts.in_path)) {
      auto pair = annotation::external_label_adapter(
          record.instruction, record.chosen, record.rejected, record.source);
      ordered.push_back(
          synthesis::assemble_ordered_example(record.instruction, pair, opts.seed));
    }
  } else {
    throw ConfigError("unknown adapter: " + opts.adapter);
  }
  return ordered;
}

void run_annotate(const AnnotateOptions& opts) {
  auto pool = adapt_input(opts);
  if (pool.empty()) {
    throw ConfigError("no ordered examples to annotate from " + opts.in_path);
  }
  auto gateway = make_judge_gateway(opts.gateway, pool, false);

  auto result = annotation::annotate_pool(gateway, pool, opts.model, opts.n,
                                          sampling_presets::generation(),
                                          opts.seed, opts.iteration);
  auto examples = std::move(result.examples);
  if (!opts.no_balance) {
    examples = annotation::balance(std::move(examples), opts.seed);
  }
  jsonl::write_file(opts.out_path, examples);

  std::cout << "examples: " << result.stats.total
            << "  retained: " << result.stats.retained
            << "  discarded: " << result.stats.discarded;
  if (!opts.no_balance) {
    std::cout << "  balanced: " << examples.size();
  }
  std::cout << "\nwrote " << opts.out_path << "\n";
}

// ---------------------------------------------------------------------------
// emit

struct EmitOptions {
  std::string in_path;
  int iteration = 0;
  std::string out_dir;
  std::string system_prompt_file;
  std::vector<std::string> sidecar_overrides;
};

void run_emit(const EmitOptions& opts) {
  auto examples = jsonl::read_file<TrainingExample>(opts.in_path);

  std::string system_prompt;
  if (!opts.system_prompt_file.empty()) {
    std::ifstream in(opts.system_prompt_file, std::ios::binary);
    if (!in) {
      throw ConfigError("cannot read system prompt file " +
                        opts.system_prompt_file);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    system_prompt = buffer.str();
  }

  std::map<std::string, std::string> overrides;
  for (const auto& kv : opts.sidecar_overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("sidecar override must be key=value: " + kv);
    }
    overrides[kv.substr(0, eq)] = kv.substr(eq + 1);
  }

  const std::filesystem::path dir(opts.out_dir);
  auto manifest = dataset::emit_training_file(examples, system_prompt,
                                              dir / "train.jsonl", opts.iteration);
  dataset::write_manifest(manifest, dir / "manifest.json");
  dataset::emit_trainer_sidecar(dir / "trainer_sidecar.toml", overrides);

  std::cout << "emitted " << manifest.example_count << " records (A:"
            << manifest.label_counts["A"] << " B:" << manifest.label_counts["B"]
            << ") hash " << manifest.content_hash << "\n";
  std::cout << "wrote " << (dir / "train.jsonl").string() << "\n";
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateOptions {
  GatewayCliOptions gateway;
  std::string in_path;
  std::string model = "mock-judge";
  std::string mode = "avg";
  int votes = 32;
  std::uint64_t seed = 0;
  std::string out_path;
  std::string agreement_mode = "per-order";
  std::string tie_break = "absent";
};

void run_evaluate(const EvaluateOptions& opts) {
  auto items = evaluation::load_eval_dataset(opts.in_path, opts.seed);
  std::vector<OrderedExample> examples;
  examples.reserve(items.size());
  for (const auto& item : items) {
    examples.push_back(item.example);
  }
  auto gateway = make_judge_gateway(opts.gateway, examples, true);

  evaluation::JudgeOptions judge;
  judge.model = opts.model;
  judge.tie_break = opts.tie_break == "prefer-a" ? evaluation::TieBreak::prefer_a
                                                 : evaluation::TieBreak::absent;
  evaluation::AccuracyMode mode = evaluation::AccuracyMode::average;
  if (opts.mode == "majority") {
    judge.votes = opts.votes;
    judge.sampling = sampling_presets::majority_vote_eval(opts.votes);
    mode = evaluation::AccuracyMode::forward;
  } else if (opts.mode == "fwd") {
    mode = evaluation::AccuracyMode::forward;
  } else if (opts.mode == "consistent") {
    mode = evaluation::AccuracyMode::position_consistent;
  } else if (opts.mode != "avg") {
    throw ConfigError("unknown evaluation mode: " + opts.mode);
  }

  auto agreement_mode = opts.agreement_mode == "per-pair"
                            ? evaluation::AgreementMode::per_pair
                            : evaluation::AgreementMode::per_order;
  auto report =
      evaluation::evaluate_dataset(gateway, items, judge, mode, agreement_mode);

  std::cout << evaluation::report_to_table(report);
  if (!opts.out_path.empty()) {
    write_text(opts.out_path, evaluation::report_to_json(report).dump(2) + "\n");
    std::cout << "wrote " << opts.out_path << "\n";
  }
}

// ---------------------------------------------------------------------------
// iter run

struct IterRunOptions {
  GatewayCliOptions gateway;
  std::string state_dir;
  std::string pool_path;
  std::string seed_judge_model = "mock-seed-judge";
  std::string generator_model;
  int n = kDefaultJudgmentSamples;
  std::uint64_t seed = 0;
  bool freeze_pairs = true;
};

void run_iter_run(const IterRunOptions& opts) {
  orchestrator::Config config;
  config.backend = opts.gateway.backend;
  config.base_url = opts.gateway.base_url;
  config.api_key_env = opts.gateway.api_key_env;
  config.api_path = opts.gateway.api_path;
  config.max_attempts = opts.gateway.max_attempts;
  config.parallelism = opts.gateway.parallelism;
  config.cache_path = opts.gateway.cache_path;
  config.seed_judge_model = opts.seed_judge_model;
  config.generator_model = opts.generator_model;
  config.ordered_examples_path = opts.pool_path;
  config.freeze_pairs = opts.freeze_pairs;
  config.judgment_samples = opts.n;
  config.seed = opts.seed;
  config.mock_judge_accuracy = opts.gateway.mock_judge_accuracy;
  config.mock_seed = opts.gateway.mock_seed;

  auto state = orchestrator::run_iteration(opts.state_dir, config);
  std::cout << "iteration " << state.iteration << ": "
            << orchestrator::to_string(state.status) << "  emitted "
            << state.emitted_count << " of " << state.pool_size
            << " pool examples (retained " << state.retained_count << ")\n";
  std::cout << "manifest: " << state.dataset_manifest << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"judgekit: synthetic preference-judgment data pipelines and "
               "order-robust judge evaluation"};
  app.require_subcommand(1);
  app.fallthrough();  // parent options (e.g. --config) usable after a subcommand
  app.set_config("--config", "", "TOML config file; command-line flags override");

  std::function<void()> action;

  // curate
  auto curate_opts = std::make_shared<CurateOptions>();
  {
    auto* cmd = app.add_subcommand(
        "curate", "Categorize an instruction pool and select a training subset");
    cmd->add_option("--pool", curate_opts->pool_path, "Instruction pool JSONL")
        ->required();
    cmd->add_option("--out", curate_opts->out_path, "Selected instructions JSONL")
        ->capture_default_str();
    cmd->add_option("--annotated-out", curate_opts->annotated_out,
                    "Annotated pool JSONL");
    cmd->add_option("--report", curate_opts->report_path,
                    "Distribution report JSON");
    cmd->add_option("--report-csv", curate_opts->report_csv_path,
                    "Distribution report CSV");
    cmd->add_option("--categories", curate_opts->categories,
                    "Allowed category (repeatable)");
    cmd->add_option("--model", curate_opts->model, "Categorizer model id")
        ->capture_default_str();
    cmd->add_option("--max", curate_opts->max_count, "Selection size cap");
    cmd->add_option("--min-complexity", curate_opts->min_complexity,
                    "Minimum complexity score")
        ->capture_default_str();
    cmd->add_option("--seed", curate_opts->seed, "Selection sampling seed")
        ->capture_default_str();
    cmd->add_flag("--no-dedupe", curate_opts->no_dedupe,
                  "Keep exact duplicate instruction texts");
    cmd->add_option("--max-tokens", curate_opts->max_tokens,
                    "Whitespace-token budget per instruction")
        ->capture_default_str();
    add_gateway_options(cmd, curate_opts->gateway);
    cmd->callback([curate_opts, &action] {
      action = [curate_opts] { run_curate(*curate_opts); };
    });
  }

  // synthesize
  auto synth_opts = std::make_shared<SynthesizeOptions>();
  {
    auto* cmd = app.add_subcommand(
        "synthesize", "Construct chosen/rejected pairs and randomize A/B order");
    cmd->add_option("--in", synth_opts->in_path, "Instructions JSONL")->required();
    cmd->add_option("--method", synth_opts->method, "Pair construction method")
        ->check(CLI::IsMember({"noisy-instruction", "degraded-response"}))
        ->capture_default_str();
    cmd->add_option("--model", synth_opts->model, "Generator model id")
        ->capture_default_str();
    cmd->add_option("--seed", synth_opts->seed, "Order randomization seed")
        ->capture_default_str();
    cmd->add_option("--pairs-out", synth_opts->pairs_out, "Pairs JSONL");
    cmd->add_option("--out", synth_opts->out_path, "Ordered examples JSONL")
        ->capture_default_str();
    cmd->add_option("--temperature", synth_opts->temperature,
                    "Generator temperature")
        ->capture_default_str();
    cmd->add_option("--top-p", synth_opts->top_p, "Generator top_p")
        ->capture_default_str();
    add_gateway_options(cmd, synth_opts->gateway);
    cmd->callback([synth_opts, &action] {
      action = [synth_opts] { run_synthesize(*synth_opts); };
    });
  }

  // annotate
  auto annotate_opts = std::make_shared<AnnotateOptions>();
  {
    auto* cmd = app.add_subcommand(
        "annotate",
        "Sample judgments, rejection-filter against gold, and balance labels");
    cmd->add_option("--in", annotate_opts->in_path, "Input JSONL")->required();
    cmd->add_option("--adapter", annotate_opts->adapter,
                    "Input adapter (none = ordered examples)")
        ->check(CLI::IsMember({"none", "helpsteer2", "gsm8k", "external"}))
        ->capture_default_str();
    cmd->add_option("--model", annotate_opts->model, "Judge model id")
        ->capture_default_str();
    cmd->add_option("--n", annotate_opts->n, "Judgments sampled per example")
        ->capture_default_str();
    cmd->add_option("--seed", annotate_opts->seed, "Sampling / ordering seed")
        ->capture_default_str();
    cmd->add_option("--iteration", annotate_opts->iteration,
                    "Iteration tag for emitted examples")
        ->capture_default_str();
    cmd->add_flag("--no-balance", annotate_opts->no_balance,
                  "Skip label balancing");
    cmd->add_option("--out", annotate_opts->out_path, "Training examples JSONL")
        ->capture_default_str();
    add_gateway_options(cmd, annotate_opts->gateway);
    cmd->callback([annotate_opts, &action] {
      action = [annotate_opts] { run_annotate(*annotate_opts); };
    });
  }

  // emit
  auto emit_opts = std::make_shared<EmitOptions>();
  {
    auto* cmd = app.add_subcommand(
        "emit", "Write the fine-tuning file, manifest, and trainer sidecar");
    cmd->add_option("--in", emit_opts->in_path, "Training examples JSONL")
        ->required();
    cmd->add_option("--iter", emit_opts->iteration, "Iteration number")
        ->capture_default_str();
    cmd->add_option("--out", emit_opts->out_dir, "Output directory")->required();
    cmd->add_option("--system-prompt-file", emit_opts->system_prompt_file,
                    "Override the judge system prompt");
    cmd->add_option("--sidecar", emit_opts->sidecar_overrides,
                    "Trainer sidecar override key=value (repeatable)");
    cmd->callback([emit_opts, &action] {
      action = [emit_opts] { run_emit(*emit_opts); };
    });
  }

  // evaluate
  auto eval_opts = std::make_shared<EvaluateOptions>();
  {
    auto* cmd = app.add_subcommand(
        "evaluate", "Judge an evaluation set in both response orders");
    cmd->add_option("--in", eval_opts->in_path, "Evaluation dataset JSONL")
        ->required();
    cmd->add_option("--model", eval_opts->model, "Judge model id")
        ->capture_default_str();
    cmd->add_option("--mode", eval_opts->mode, "Accuracy mode")
        ->check(CLI::IsMember({"fwd", "avg", "consistent", "majority"}))
        ->capture_default_str();
    cmd->add_option("--votes", eval_opts->votes,
                    "Samples per order for majority mode")
        ->capture_default_str();
    cmd->add_option("--seed", eval_opts->seed,
                    "Order seed for chosen/rejected records")
        ->capture_default_str();
    cmd->add_option("--out", eval_opts->out_path, "Report JSON path");
    cmd->add_option("--agreement-mode", eval_opts->agreement_mode,
                    "Human agreement computation")
        ->check(CLI::IsMember({"per-order", "per-pair"}))
        ->capture_default_str();
    cmd->add_option("--tie-break", eval_opts->tie_break,
                    "Majority-vote tie handling")
        ->check(CLI::IsMember({"absent", "prefer-a"}))
        ->capture_default_str();
    add_gateway_options(cmd, eval_opts->gateway);
    cmd->callback([eval_opts, &action] {
      action = [eval_opts] { run_evaluate(*eval_opts); };
    });
  }

  // iter
  {
    auto* iter = app.add_subcommand("iter", "Iteration state machine");
    iter->require_subcommand(1);

    auto run_opts = std::make_shared<IterRunOptions>();
    auto* run_cmd = iter->add_subcommand(
        "run", "Annotate the pool with the current judge and emit a dataset");
    run_cmd->add_option("--state-dir", run_opts->state_dir, "State directory")
        ->required();
    run_cmd->add_option("--pool", run_opts->pool_path, "Ordered examples JSONL")
        ->required();
    run_cmd->add_option("--seed-judge-model", run_opts->seed_judge_model,
                        "Judge model for iteration 0")
        ->capture_default_str();
    run_cmd->add_option("--generator-model", run_opts->generator_model,
                        "Generator model recorded in provenance");
    run_cmd->add_option("--n", run_opts->n, "Judgments sampled per example")
        ->capture_default_str();
    run_cmd->add_option("--seed", run_opts->seed, "Pipeline seed")
        ->capture_default_str();
    run_cmd->add_flag("--freeze-pairs,!--no-freeze-pairs", run_opts->freeze_pairs,
                      "Pin pairs across iterations (pairs are constructed once)");
    add_gateway_options(run_cmd, run_opts->gateway);
    run_cmd->callback([run_opts, &action] {
      action = [run_opts] { run_iter_run(*run_opts); };
    });

    auto reg_state_dir = std::make_shared<std::string>();
    auto reg_iteration = std::make_shared<int>(0);
    auto reg_model = std::make_shared<std::string>();
    auto* reg_cmd = iter->add_subcommand(
        "register", "Register the externally fine-tuned model for an iteration");
    reg_cmd->add_option("--state-dir", *reg_state_dir, "State directory")
        ->required();
    reg_cmd->add_option("--iter", *reg_iteration, "Iteration number")->required();
    reg_cmd->add_option("--model", *reg_model, "Fine-tuned model id")->required();
    reg_cmd->callback([reg_state_dir, reg_iteration, reg_model, &action] {
      action = [reg_state_dir, reg_iteration, reg_model] {
        auto state = orchestrator::register_model(*reg_state_dir, *reg_iteration,
                                                  *reg_model);
        std::cout << "iteration " << state.iteration << ": "
                  << orchestrator::to_string(state.status)
                  << "  model=" << state.registered_model << "\n";
      };
    });

    auto status_state_dir = std::make_shared<std::string>();
    auto* status_cmd =
        iter->add_subcommand("status", "Show iteration statuses and sizes");
    status_cmd->add_option("--state-dir", *status_state_dir, "State directory")
        ->required();
    status_cmd->callback([status_state_dir, &action] {
      action = [status_state_dir] {
        std::cout << orchestrator::status(*status_state_dir);
      };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (action) action();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const GatewayError& e) {
    std::cerr << "endpoint error: " << e.what() << "\n";
    return 3;
  } catch (const StateError& e) {
    std::cerr << "state error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
