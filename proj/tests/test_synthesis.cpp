#include "judgekit/synthesis.hpp"

#include <gtest/gtest.h>

#include <set>

#include "judgekit/rng.hpp"
#include "test_support.hpp"

namespace judgekit::synthesis {
namespace {

using testing::make_instruction;

TEST(PairPrompt, EmbedsInstructionAndBaseline) {
  const auto prompt = render_pair_prompt(make_instruction("i1", "2+2?"), "4");
  EXPECT_NE(prompt.find("2+2?"), std::string::npos);
  EXPECT_NE(prompt.find("The start of Assistant's Answer\n4\nThe end of "
                        "Assistant's Answer"),
            std::string::npos);
  EXPECT_NE(prompt.find("generate a modified instruction that is highly "
                        "relevant but not semantically identical"),
            std::string::npos);
  EXPECT_NE(prompt.find("IMPORTANT: Please strictly follow the following "
                        "format:"),
            std::string::npos);
}

TEST(PairPrompt, EmptyInstructionStillRenders) {
  Instruction empty_text{"i1", {Turn{Role::user, ""}}, ""};
  const auto prompt = render_pair_prompt(empty_text, "some baseline");
  EXPECT_NE(prompt.find("some baseline"), std::string::npos);
}

TEST(DegradePrompt, ListsTheFourAspectsAndIsPure) {
  const auto instruction = make_instruction("i1", "explain rainbows");
  const auto a = render_degrade_prompt(instruction, "light refracts");
  const auto b = render_degrade_prompt(instruction, "light refracts");
  EXPECT_EQ(a, b);
  EXPECT_NE(a.find("helpfulness, correctness, coherence, verbosity"),
            std::string::npos);
  EXPECT_NE(a.find("make it worse"), std::string::npos);
  EXPECT_NE(a.find("[The start of Assistant's Answer]\nlight refracts"),
            std::string::npos);
}

TEST(PairParse, RecoversWellFormedReply) {
  const std::string reply =
      "User Question Modified\n"
      "difference between 16000 and 12000\n"
      "\n"
      "The start of Assistant's answer to the modified instruction\n"
      "The difference is 4000.\n"
      "The end of Assistant's answer to the modified instruction";
  auto parts = parse_pair_response(reply);
  EXPECT_EQ(parts.modified_instruction, "difference between 16000 and 12000");
  EXPECT_EQ(parts.worse_response, "The difference is 4000.");
}

TEST(PairParse, AcceptsBracketedHeaders) {
  const std::string reply =
      "[User Question Modified]\nnew question\n"
      "[The start of Assistant's answer to the modified instruction]\n"
      "new answer\n"
      "[The end of Assistant's answer to the modified instruction]";
  auto parts = parse_pair_response(reply);
  EXPECT_EQ(parts.modified_instruction, "new question");
  EXPECT_EQ(parts.worse_response, "new answer");
}

TEST(PairParse, IgnoresLeadingProse) {
  const std::string reply =
      "Sure! Here is what you asked for.\n\n"
      "User Question Modified\nvariant q\n"
      "The start of Assistant's answer to the modified instruction\n"
      "variant a\n"
      "The end of Assistant's answer to the modified instruction\nthanks!";
  auto parts = parse_pair_response(reply);
  EXPECT_EQ(parts.modified_instruction, "variant q");
  EXPECT_EQ(parts.worse_response, "variant a");
}

TEST(PairParse, MissingDelimitersAreErrors) {
  EXPECT_THROW(parse_pair_response("no markers here"), ParseError);
  EXPECT_THROW(parse_pair_response(
                   "User Question Modified\nq\n"
                   "The start of Assistant's answer to the modified "
                   "instruction\nunterminated"),
               ParseError);
}

TEST(DegradeParse, MinimalWellFormed) {
  EXPECT_EQ(parse_degrade_response(
                "[The start of a rewritten worse answer]\nno.\n"
                "[The end of a rewritten worse answer]"),
            "no.");
}

TEST(DegradeParse, FirstMatchedPairWinsWhenDoubled) {
  const std::string reply =
      "[The start of a rewritten worse answer]\nfirst\n"
      "[The end of a rewritten worse answer]\n"
      "[The start of a rewritten worse answer]\nsecond\n"
      "[The end of a rewritten worse answer]";
  EXPECT_EQ(parse_degrade_response(reply), "first");
}

TEST(DegradeParse, EmptyWorseAnswerIsAnError) {
  EXPECT_THROW(parse_degrade_response(
                   "[The start of a rewritten worse answer]\n  \n"
                   "[The end of a rewritten worse answer]"),
               ParseError);
  EXPECT_THROW(parse_degrade_response("nothing"), ParseError);
}

// ---------------------------------------------------------------------------
// build_pair against scripted mocks

llm::Gateway scripted_gateway(std::shared_ptr<llm::MockBackend> backend) {
  return llm::Gateway(std::move(backend), llm::GatewayConfig{"", 2});
}

TEST(BuildPair, ComposesBaselineAndNoisyInstruction) {
  auto backend = std::make_shared<llm::MockBackend>();
  backend->enqueue("4");
  backend->enqueue(
      "User Question Modified\nwhat is 2*3?\n"
      "The start of Assistant's answer to the modified instruction\n6\n"
      "The end of Assistant's answer to the modified instruction");
  auto gateway = scripted_gateway(backend);

  BuildOptions options;
  options.model = "gen";
  auto pair = build_pair(gateway, make_instruction("i1", "2+2?"),
                         PairMethod::noisy_instruction, options);
  EXPECT_EQ(pair.chosen, "4");
  EXPECT_EQ(pair.rejected, "6");
  EXPECT_EQ(pair.modified_instruction, "what is 2*3?");
  EXPECT_EQ(pair.method, PairMethod::noisy_instruction);
  EXPECT_EQ(pair.generator_model, "gen");
}

TEST(BuildPair, IdenticalWorseResponseViolatesInvariant) {
  auto backend = std::make_shared<llm::MockBackend>();
  backend->enqueue("4");
  backend->enqueue(
      "User Question Modified\nsame thing\n"
      "The start of Assistant's answer to the modified instruction\n4\n"
      "The end of Assistant's answer to the modified instruction");
  auto gateway = scripted_gateway(backend);

  BuildOptions options;
  options.model = "gen";
  EXPECT_THROW(build_pair(gateway, make_instruction("i1", "2+2?"),
                          PairMethod::noisy_instruction, options),
               ValidationError);
}

TEST(BuildPair, RetriesOnceAfterParseFailure) {
  auto backend = std::make_shared<llm::MockBackend>();
  backend->enqueue("baseline");
  backend->enqueue("malformed reply");
  backend->enqueue(
      "[The start of a rewritten worse answer]\nworse\n"
      "[The end of a rewritten worse answer]");
  auto gateway = scripted_gateway(backend);

  BuildOptions options;
  options.model = "gen";
  auto pair = build_pair(gateway, make_instruction("i1", "q"),
                         PairMethod::degraded_response, options);
  EXPECT_EQ(pair.rejected, "worse");
  EXPECT_FALSE(pair.modified_instruction.has_value());
}

TEST(BuildPairs, SkipsAndLogsSeededParseFailures) {
  // The handler fails BOTH attempts for ~10% of instructions, chosen by a
  // deterministic hash of the pair prompt.
  const std::uint64_t seed = 99;
  auto fails = [seed](const llm::ChatRequest& request) {
    return rng::mix(seed, llm::prompt_hash(request)) % 10 == 0;
  };
  auto backend = std::make_shared<llm::MockBackend>(
      [&fails](const llm::ChatRequest& request, int) -> std::string {
        const std::string& prompt = request.messages.back().content;
        if (prompt.find("generate a modified instruction") == std::string::npos) {
          return "baseline for: " + prompt.substr(0, 16);
        }
        if (fails(request)) {
          return "malformed";
        }
        return "User Question Modified\nq'\n"
               "The start of Assistant's answer to the modified instruction\n"
               "off-target answer\n"
               "The end of Assistant's answer to the modified instruction";
      });
  llm::Gateway gateway(backend, llm::GatewayConfig{"", 4});

  std::vector<Instruction> instructions;
  for (int i = 0; i < 100; ++i) {
    instructions.push_back(make_instruction("i" + std::to_string(i),
                                            "question " + std::to_string(i)));
  }
  BuildOptions options;
  options.model = "gen";
  auto batch =
      build_pairs(gateway, instructions, PairMethod::noisy_instruction, options);

  // Count the expected failures from the same schedule.
  std::size_t expected_failures = 0;
  for (const auto& instruction : instructions) {
    const std::string baseline =
        "baseline for: " +
        llm::ChatRequest::simple("gen", instruction.flattened_text(),
                                 options.sampling.with_n(1))
            .messages.back()
            .content.substr(0, 16);
    auto pair_request = llm::ChatRequest::simple(
        "gen", render_pair_prompt(instruction, baseline),
        options.sampling.with_n(1));
    if (fails(pair_request)) ++expected_failures;
  }
  EXPECT_GT(expected_failures, 0u);
  EXPECT_EQ(batch.failed_ids.size(), expected_failures);
  EXPECT_EQ(batch.pairs.size(), 100u - expected_failures);
}

TEST(GenerateBaseline, BoundedConcurrencyMatchesSequentialOrder) {
  auto handler = [](const llm::ChatRequest& request, int) {
    return "answer to: " + request.messages.back().content;
  };
  std::vector<Instruction> instructions;
  for (int i = 0; i < 10; ++i) {
    instructions.push_back(make_instruction("i" + std::to_string(i),
                                            "question " + std::to_string(i)));
  }
  auto run_with = [&](int parallelism) {
    llm::Gateway gateway(std::make_shared<llm::MockBackend>(handler),
                         llm::GatewayConfig{"", parallelism});
    return llm::parallel_map(
        instructions, gateway.parallelism(),
        [&](const Instruction& instruction, std::size_t) {
          return generate_baseline(gateway, instruction, "gen",
                                   sampling_presets::generation());
        });
  };
  auto sequential = run_with(1);
  auto bounded = run_with(2);
  ASSERT_EQ(bounded.size(), 10u);
  EXPECT_EQ(bounded, sequential);
  EXPECT_EQ(bounded[7], "answer to: question 7");
}

TEST(GenerateBaseline, EmptyCompletionIsAnError) {
  auto backend = std::make_shared<llm::MockBackend>();
  backend->enqueue("");
  llm::Gateway gateway(backend);
  EXPECT_THROW(generate_baseline(gateway, make_instruction("i1", "q"), "gen",
                                 sampling_presets::generation()),
               GatewayError);
}

// ---------------------------------------------------------------------------
// Order randomization

ResponsePair pair_for(const std::string& id) {
  return ResponsePair{id,          "chosen text", "rejected text", "variant",
                      PairMethod::noisy_instruction, "gen"};
}

TEST(AssembleOrdered, GoldPointsAtTheChosenResponse) {
  const auto instruction = make_instruction("i1", "q");
  auto example = assemble_ordered_example(instruction, pair_for("i1"), 5);
  if (example.gold == Verdict::A) {
    EXPECT_EQ(example.response_a, "chosen text");
  } else {
    EXPECT_EQ(example.response_b, "chosen text");
  }
  EXPECT_EQ(example.chosen_response(), "chosen text");
  EXPECT_EQ(example.rejected_response(), "rejected text");
  EXPECT_EQ(example.order_seed, 5);
}

TEST(AssembleOrdered, PlacementIsDeterministic) {
  const auto instruction = make_instruction("i1", "q");
  auto a = assemble_ordered_example(instruction, pair_for("i1"), 5);
  auto b = assemble_ordered_example(instruction, pair_for("i1"), 5);
  EXPECT_EQ(a, b);
}

TEST(AssembleOrdered, HashCoinIsNearlyBalanced) {
  std::size_t gold_a = 0;
  const std::uint64_t seed = 1234;
  for (int i = 0; i < 10000; ++i) {
    const std::string id = "p" + std::to_string(i);
    auto example =
        assemble_ordered_example(make_instruction(id, "q"), pair_for(id), seed);
    if (example.gold == Verdict::A) ++gold_a;
  }
  const double fraction = static_cast<double>(gold_a) / 10000.0;
  EXPECT_GE(fraction, 0.48);
  EXPECT_LE(fraction, 0.52);
}

TEST(AssembleOrdered, ProvenanceSurvivesAssembly) {
  const auto instruction = make_instruction("i1", "q");
  auto pair = pair_for("i1");
  auto example = assemble_ordered_example(instruction, pair, 5);
  EXPECT_EQ(example.example_id, "i1:noisy");
  EXPECT_EQ(example.instruction, instruction);
  // method and generator stay on the pair; the example never mutates them
  EXPECT_EQ(pair.method, PairMethod::noisy_instruction);
  EXPECT_EQ(pair.generator_model, "gen");
}

}  // namespace
}  // namespace judgekit::synthesis
