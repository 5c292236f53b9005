#include "judgekit/orchestrator.hpp"

#include <gtest/gtest.h>

#include "judgekit/annotation.hpp"
#include "judgekit/dataset.hpp"
#include "judgekit/jsonl.hpp"
#include "test_support.hpp"

namespace judgekit::orchestrator {
namespace {

using testing::make_example;
using testing::TempDir;

std::string write_pool(const TempDir& dir, int count,
                       const std::string& name = "pool.jsonl") {
  std::vector<OrderedExample> pool;
  for (int i = 0; i < count; ++i) {
    pool.push_back(make_example("e" + std::to_string(i),
                                i % 2 ? Verdict::A : Verdict::B));
  }
  const auto path = dir.file(name);
  jsonl::write_file(path, pool);
  return path.string();
}

Config mock_config(const std::string& pool_path, double accuracy,
                   int samples = 15) {
  Config config;
  config.backend = "mock";
  config.seed_judge_model = "seed-judge";
  config.generator_model = "generator";
  config.ordered_examples_path = pool_path;
  config.judgment_samples = samples;
  config.seed = 11;
  config.mock_judge_accuracy = accuracy;
  config.mock_seed = 4;
  config.parallelism = 8;
  return config;
}

TEST(RunIteration, EmitsABalancedDatasetWhoseManifestMatchesTheFile) {
  TempDir dir;
  const auto state_dir = dir.file("state");
  auto config = mock_config(write_pool(dir, 60), 0.9);

  auto state = run_iteration(state_dir, config);
  EXPECT_EQ(state.iteration, 0);
  EXPECT_EQ(state.status, Status::awaiting_trainer);
  EXPECT_EQ(state.judge_model, "seed-judge");
  EXPECT_EQ(state.pool_size, 60u);
  // p=.9, n=15: essentially everything survives rejection filtering
  EXPECT_GE(state.retained_count, 58u);
  EXPECT_GT(state.emitted_count, 0u);

  auto manifest = dataset::read_manifest(state_dir / state.dataset_manifest);
  EXPECT_EQ(manifest.label_counts.at("A"), manifest.label_counts.at("B"));
  EXPECT_EQ(manifest.example_count, state.emitted_count);

  auto records = dataset::load_training_file(state_dir / "iter_0/train.jsonl",
                                             manifest);
  EXPECT_EQ(records.size(), manifest.example_count);

  // provenance file round-trips to valid training examples
  auto training = jsonl::read_file<TrainingExample>(
      state_dir / "iter_0/training_examples.jsonl");
  EXPECT_EQ(training.size(), state.emitted_count);
  for (const auto& example : training) {
    EXPECT_EQ(annotation::extract_verdict(example.judgment.raw),
              example.ordered.gold);
  }
}

TEST(RunIteration, ReRunReproducesByteIdenticalArtifacts) {
  TempDir dir;
  const auto state_dir = dir.file("state");
  auto config = mock_config(write_pool(dir, 40), 0.9);

  run_iteration(state_dir, config);
  const auto train = testing::read_file(state_dir / "iter_0/train.jsonl");
  const auto manifest = testing::read_file(state_dir / "iter_0/manifest.json");
  const auto sidecar =
      testing::read_file(state_dir / "iter_0/trainer_sidecar.toml");

  auto state = run_iteration(state_dir, config);  // idempotent re-run
  EXPECT_EQ(state.status, Status::awaiting_trainer);
  EXPECT_EQ(testing::read_file(state_dir / "iter_0/train.jsonl"), train);
  EXPECT_EQ(testing::read_file(state_dir / "iter_0/manifest.json"), manifest);
  EXPECT_EQ(testing::read_file(state_dir / "iter_0/trainer_sidecar.toml"),
            sidecar);
}

TEST(RunIteration, HopelessJudgeIsAnExplicitEmptyIteration) {
  TempDir dir;
  const auto state_dir = dir.file("state");
  auto config = mock_config(write_pool(dir, 20), 0.0);
  EXPECT_THROW(run_iteration(state_dir, config), EmptyIterationError);
}

TEST(RunIteration, RejectsDuplicateExampleIds) {
  TempDir dir;
  const auto state_dir = dir.file("state");
  std::vector<OrderedExample> pool = {make_example("dup", Verdict::A),
                                      make_example("dup", Verdict::B)};
  const auto path = dir.file("pool.jsonl");
  jsonl::write_file(path, pool);
  EXPECT_THROW(run_iteration(state_dir, mock_config(path.string(), 0.9)),
               ValidationError);
}

TEST(RunIteration, RequiresSeedJudgeAndPool) {
  TempDir dir;
  const auto state_dir = dir.file("state");
  auto config = mock_config(write_pool(dir, 5), 0.9);
  config.seed_judge_model.clear();
  EXPECT_THROW(run_iteration(state_dir, config), ConfigError);

  config.seed_judge_model = "seed";
  config.ordered_examples_path.clear();
  EXPECT_THROW(run_iteration(state_dir, config), ConfigError);
}

TEST(RegisterModel, ForwardOnlyTransitions) {
  TempDir dir;
  const auto state_dir = dir.file("state");
  auto config = mock_config(write_pool(dir, 20), 0.9);
  run_iteration(state_dir, config);

  auto state = register_model(state_dir, 0, "trained-judge-v1");
  EXPECT_EQ(state.status, Status::registered);
  EXPECT_EQ(state.registered_model, "trained-judge-v1");

  // registering twice regresses nothing and fails loudly
  EXPECT_THROW(register_model(state_dir, 0, "trained-judge-v2"), StateError);
  // unknown iteration
  EXPECT_THROW(register_model(state_dir, 3, "nope"), StateError);
  // bad input
  EXPECT_THROW(register_model(state_dir, 0, ""), ConfigError);
}

TEST(RegisterModel, BeforeAnyIterationIsAStateError) {
  TempDir dir;
  EXPECT_THROW(register_model(dir.file("state"), 0, "model"), StateError);
}

TEST(MarkEvaluated, OnlyFromRegistered) {
  TempDir dir;
  const auto state_dir = dir.file("state");
  auto config = mock_config(write_pool(dir, 20), 0.9);
  run_iteration(state_dir, config);
  EXPECT_THROW(mark_evaluated(state_dir, 0), StateError);
  register_model(state_dir, 0, "m1");
  EXPECT_EQ(mark_evaluated(state_dir, 0).status, Status::evaluated);
  EXPECT_THROW(mark_evaluated(state_dir, 0), StateError);
}

TEST(Iterations, SecondIterationUsesTheRegisteredJudgeAndFreshJudgments) {
  TempDir dir;
  const auto state_dir = dir.file("state");
  const auto pool_path = write_pool(dir, 300);

  // n=1 makes retention track per-sample accuracy, so improving the
  // judge between iterations visibly raises retention.
  auto weak = mock_config(pool_path, 0.5, 1);
  auto first = run_iteration(state_dir, weak);
  EXPECT_EQ(first.iteration, 0);
  register_model(state_dir, 0, "judge-after-iter0");

  auto strong = mock_config(pool_path, 0.8, 1);
  auto second = run_iteration(state_dir, strong);
  EXPECT_EQ(second.iteration, 1);
  EXPECT_EQ(second.judge_model, "judge-after-iter0");
  EXPECT_GT(second.retained_count, first.retained_count);

  auto state = load_state(state_dir);
  ASSERT_EQ(state.iterations.size(), 2u);
  EXPECT_EQ(state.iterations[0].status, Status::registered);
  EXPECT_EQ(state.iterations[1].status, Status::awaiting_trainer);
}

TEST(Status, FreshDirectoryAndProgression) {
  TempDir dir;
  const auto state_dir = dir.file("state");
  EXPECT_EQ(judgekit::orchestrator::status(state_dir), "iteration 0: not started\n");

  auto config = mock_config(write_pool(dir, 30), 0.9);
  auto state = run_iteration(state_dir, config);
  auto text = judgekit::orchestrator::status(state_dir);
  EXPECT_NE(text.find("iteration 0: awaiting-trainer"), std::string::npos);
  EXPECT_NE(text.find("judge=seed-judge"), std::string::npos);
  EXPECT_NE(text.find("emitted=" + std::to_string(state.emitted_count)),
            std::string::npos);
  EXPECT_NE(text.find("labels A:"), std::string::npos);

  register_model(state_dir, 0, "judge-v1");
  text = judgekit::orchestrator::status(state_dir);
  EXPECT_NE(text.find("registered"), std::string::npos);
  EXPECT_NE(text.find("model=judge-v1"), std::string::npos);
}

TEST(StateFile, CorruptStateIsAStateError) {
  TempDir dir;
  const auto state_dir = dir.file("state");
  std::filesystem::create_directories(state_dir);
  testing::write_file(state_dir / "state.json", "{not json");
  EXPECT_THROW(load_state(state_dir), StateError);
  EXPECT_THROW(judgekit::orchestrator::status(state_dir), StateError);
}

TEST(StateFile, NonContiguousIterationsAreRejected) {
  TempDir dir;
  const auto state_dir = dir.file("state");
  std::filesystem::create_directories(state_dir);
  testing::write_file(
      state_dir / "state.json",
      R"({"iterations":[{"iteration":1,"judge_model":"x","status":"registered"}]})");
  EXPECT_THROW(load_state(state_dir), StateError);
}

TEST(Lock, OneOrchestratorPerStateDirectory) {
  TempDir dir;
  const auto state_dir = dir.file("state");
  StateLock held(state_dir);
  EXPECT_THROW({ StateLock contender(state_dir); }, StateError);
}

}  // namespace
}  // namespace judgekit::orchestrator
