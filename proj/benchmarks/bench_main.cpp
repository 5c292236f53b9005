// Microbenchmarks for the hot pipeline paths: verdict parsing, request
// fingerprinting, the simulated judge, rejection filtering, order
// assembly, and dataset emission.

#include <benchmark/benchmark.h>

#include <filesystem>

#include "judgekit/annotation.hpp"
#include "judgekit/dataset.hpp"
#include "judgekit/evaluation.hpp"
#include "judgekit/gateway.hpp"
#include "judgekit/synthesis.hpp"
#include "judgekit/types.hpp"

namespace {

using namespace judgekit;

std::string long_judgment(std::size_t paragraphs) {
  std::string text;
  for (std::size_t i = 0; i < paragraphs; ++i) {
    text +=
        "Assistant A explains the reasoning step by step and checks the "
        "arithmetic, while Assistant B skips the verification and contains "
        "a mistake in the middle of the derivation. ";
  }
  text += "\n\nFinal verdict: [[A]]";
  return text;
}

void BM_ExtractVerdict(benchmark::State& state) {
  const std::string text = long_judgment(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(annotation::extract_verdict(text));
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_ExtractVerdict)->Arg(1)->Arg(16)->Arg(256);

void BM_RequestFingerprint(benchmark::State& state) {
  auto example = [] {
    OrderedExample e;
    e.example_id = "bench";
    e.instruction = Instruction::single("bench", "compare these answers");
    e.response_a = std::string(512, 'a');
    e.response_b = std::string(512, 'b');
    e.gold = Verdict::A;
    return e;
  }();
  auto request =
      annotation::judge_request(example, "judge", sampling_presets::generation());
  int index = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(llm::request_fingerprint(request, index++ & 15));
  }
}
BENCHMARK(BM_RequestFingerprint);

void BM_SimulateJudge(benchmark::State& state) {
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(llm::simulate_judge(Verdict::A, 0.7, seed++));
  }
}
BENCHMARK(BM_SimulateJudge);

void BM_RejectionFilter(benchmark::State& state) {
  OrderedExample example;
  example.example_id = "bench";
  example.instruction = Instruction::single("bench", "q");
  example.response_a = "left";
  example.response_b = "right";
  example.gold = Verdict::A;

  std::vector<JudgmentSample> samples;
  for (int i = 0; i < state.range(0); ++i) {
    const Verdict v = i % 3 == 0 ? Verdict::B : Verdict::A;
    samples.push_back(JudgmentSample{
        "reasoning [[" + to_string(v) + "]]", v, i});
  }
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        annotation::rejection_filter(example, samples, seed++));
  }
}
BENCHMARK(BM_RejectionFilter)->Arg(15);

void BM_MajorityVote(benchmark::State& state) {
  std::vector<std::optional<Verdict>> verdicts;
  for (int i = 0; i < state.range(0); ++i) {
    verdicts.push_back(i % 5 == 0 ? std::optional<Verdict>{}
                                  : std::optional<Verdict>(
                                        i % 2 ? Verdict::A : Verdict::B));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluation::majority_vote(verdicts));
  }
}
BENCHMARK(BM_MajorityVote)->Arg(15)->Arg(31);

void BM_AssembleOrdered(benchmark::State& state) {
  auto instruction = Instruction::single("bench", "q");
  ResponsePair pair{"bench", "chosen", "rejected", "variant",
                    PairMethod::noisy_instruction, "gen"};
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        synthesis::assemble_ordered_example(instruction, pair, seed++));
  }
}
BENCHMARK(BM_AssembleOrdered);

void BM_EmitTrainingFile(benchmark::State& state) {
  std::vector<TrainingExample> examples;
  for (int i = 0; i < state.range(0); ++i) {
    OrderedExample ordered;
    ordered.example_id = "bench" + std::to_string(i);
    ordered.instruction = Instruction::single(ordered.example_id, "question");
    ordered.response_a = "first response";
    ordered.response_b = "second response";
    ordered.gold = i % 2 ? Verdict::A : Verdict::B;
    examples.push_back(TrainingExample{
        ordered,
        JudgmentSample{long_judgment(4).substr(0, 400) + " [[" +
                           to_string(ordered.gold) + "]]",
                       ordered.gold, 0},
        0});
  }
  const auto path =
      std::filesystem::temp_directory_path() / "judgekit_bench_train.jsonl";
  for (auto _ : state) {
    benchmark::DoNotOptimize(dataset::emit_training_file(examples, "", path, 0));
  }
  std::filesystem::remove(path);
}
BENCHMARK(BM_EmitTrainingFile)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
