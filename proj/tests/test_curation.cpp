#include "judgekit/curation.hpp"

#include <gtest/gtest.h>

#include <algorithm>

#include "test_support.hpp"

namespace judgekit::curation {
namespace {

using testing::make_instruction;

TEST(SelectionPrompt, SubstitutesBetweenInstructionTags) {
  const auto prompt = render_selection_prompt(make_instruction("i1", "2+2?"));
  EXPECT_NE(prompt.find("<instruction>\n2+2?\n</instruction>"),
            std::string::npos);
  EXPECT_NE(prompt.find("categorize the instruction above"), std::string::npos);
  EXPECT_NE(prompt.find("Provide your final response in the following format:"),
            std::string::npos);
}

TEST(SelectionPrompt, PassesCategoryNamesThroughVerbatim) {
  const std::string tricky =
      "Is this Coding or Knowledge and Reasoning? Maybe <b>Other</b>.";
  const auto prompt = render_selection_prompt(make_instruction("i1", tricky));
  EXPECT_NE(prompt.find("<instruction>\n" + tricky + "\n</instruction>"),
            std::string::npos);
}

TEST(SelectionPrompt, FlattensMultiTurnDialogs) {
  Instruction dialog{"i1",
                     {Turn{Role::user, "hi"}, Turn{Role::assistant, "hello"},
                      Turn{Role::user, "so what is 2+2?"}},
                     ""};
  const auto prompt = render_selection_prompt(dialog);
  EXPECT_NE(
      prompt.find("<instruction>\nuser: hi\nassistant: hello\nuser: so what is "
                  "2+2?\n</instruction>"),
      std::string::npos);
}

TEST(SelectionParse, ExtractsTheThreeFields) {
  auto annotation =
      parse_selection_response("Category: Coding\nComplexity: 7\nLength: (c)");
  EXPECT_EQ(annotation.category, Category::coding);
  EXPECT_EQ(annotation.complexity, 7);
  EXPECT_EQ(annotation.expected_length, 'c');

  annotation = parse_selection_response(
      "Category: Knowledge and Reasoning\nComplexity: 9\nLength: (e)");
  EXPECT_EQ(annotation.category, Category::knowledge_and_reasoning);
  EXPECT_EQ(annotation.complexity, 9);
  EXPECT_EQ(annotation.expected_length, 'e');
}

TEST(SelectionParse, AcceptsFormatVariants) {
  auto annotation = parse_selection_response(
      "Sure, here is my analysis.\ncategory: mathematical reasoning\n"
      "complexity: 4 (multi-step)\nlength: d");
  EXPECT_EQ(annotation.category, Category::mathematical_reasoning);
  EXPECT_EQ(annotation.complexity, 4);
  EXPECT_EQ(annotation.expected_length, 'd');
}

TEST(SelectionParse, RejectsMalformedReplies) {
  EXPECT_THROW(parse_selection_response("I think this is about coding."),
               ParseError);
  EXPECT_THROW(
      parse_selection_response("Category: Poetry\nComplexity: 3\nLength: (a)"),
      ParseError);
  EXPECT_THROW(
      parse_selection_response("Category: Coding\nComplexity: hard\nLength: (a)"),
      ParseError);
  EXPECT_THROW(
      parse_selection_response("Category: Coding\nComplexity: 3\nLength: (z)"),
      ParseError);
  try {
    parse_selection_response("no fields at all");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.raw(), "no fields at all");  // offending text is carried
  }
}

std::vector<AnnotatedInstruction> three_instruction_pool() {
  return {
      {make_instruction("a", "write a function"),
       CategoryAnnotation{Category::coding, 5, 'c'}},
      {make_instruction("b", "write another function"),
       CategoryAnnotation{Category::coding, 8, 'c'}},
      {make_instruction("c", "rewrite this paragraph"),
       CategoryAnnotation{Category::rewriting, 2, 'b'}},
  };
}

TEST(Selection, FiltersByCategory) {
  SelectionFilter filter;
  filter.allowed_categories = {Category::coding};
  auto selected = select_instructions(three_instruction_pool(), filter);
  ASSERT_EQ(selected.size(), 2u);
  EXPECT_EQ(selected[0].id, "a");
  EXPECT_EQ(selected[1].id, "b");
}

TEST(Selection, AllCategoriesNoCapIsIdentityMinusDuplicates) {
  auto pool = three_instruction_pool();
  pool.push_back({make_instruction("dup", "write a function"),
                  CategoryAnnotation{Category::coding, 5, 'c'}});
  SelectionFilter filter;
  filter.allowed_categories.clear();
  for (int i = 0; i < kCategoryCount; ++i) {
    filter.allowed_categories.push_back(static_cast<Category>(i));
  }
  auto selected = select_instructions(pool, filter);
  ASSERT_EQ(selected.size(), 3u);  // duplicate text dropped
  EXPECT_EQ(selected[0].id, "a");
  EXPECT_EQ(selected[2].id, "c");
}

TEST(Selection, MinComplexityAndTokenBudget) {
  auto pool = three_instruction_pool();
  pool.push_back({make_instruction("long", std::string(4000 * 2 - 1, 'x')),
                  CategoryAnnotation{Category::coding, 9, 'c'}});
  // one giant 7999-char token is fine; make it many tokens instead
  pool.back().instruction.turns[0].text = [] {
    std::string text;
    for (int i = 0; i < 3500; ++i) text += "tok ";
    return text;
  }();

  SelectionFilter filter;
  filter.allowed_categories = {Category::coding};
  filter.min_complexity = 6;
  auto selected = select_instructions(pool, filter);
  ASSERT_EQ(selected.size(), 1u);  // "b" (complexity 8); "long" over budget
  EXPECT_EQ(selected[0].id, "b");
}

TEST(Selection, SeededSamplingIsReproducibleAndSound) {
  std::vector<AnnotatedInstruction> pool;
  for (int i = 0; i < 1000; ++i) {
    pool.push_back({make_instruction("i" + std::to_string(i),
                                     "question " + std::to_string(i)),
                    CategoryAnnotation{Category::knowledge_and_reasoning,
                                       1 + i % 10, 'c'}});
  }
  SelectionFilter filter;
  filter.allowed_categories = {Category::knowledge_and_reasoning};
  filter.max_count = 100;
  filter.seed = 7;

  auto first = select_instructions(pool, filter);
  auto second = select_instructions(pool, filter);
  ASSERT_EQ(first.size(), 100u);
  EXPECT_EQ(first, second);

  // output is a subset of the pool and respects the predicate
  for (const auto& instruction : first) {
    auto it = std::find_if(pool.begin(), pool.end(), [&](const auto& entry) {
      return entry.instruction.id == instruction.id;
    });
    ASSERT_NE(it, pool.end());
    EXPECT_EQ(it->annotation.category, Category::knowledge_and_reasoning);
  }

  filter.seed = 8;
  auto other_seed = select_instructions(pool, filter);
  EXPECT_NE(other_seed, first);
}

TEST(Report, EmptyPoolYieldsEmptyHistograms) {
  auto report = distribution_report({});
  EXPECT_TRUE(report.category_histogram.empty());
  EXPECT_TRUE(report.complexity_histogram.empty());
  EXPECT_TRUE(report.length_histogram.empty());
  EXPECT_TRUE(report.token_length_histogram.empty());
}

TEST(Report, CountsCategoriesAndTokens) {
  std::vector<AnnotatedInstruction> pool = {
      {make_instruction("a", "a b c"), CategoryAnnotation{Category::coding, 5, 'c'}},
      {make_instruction("b", "a b c"), CategoryAnnotation{Category::coding, 3, 'b'}},
  };
  auto report = distribution_report(pool);
  EXPECT_EQ(report.category_histogram[to_string(Category::coding)], 2u);
  EXPECT_EQ(report.complexity_histogram[5], 1u);
  EXPECT_EQ(report.complexity_histogram[3], 1u);
  EXPECT_EQ(report.token_length_histogram[3], 2u);
  EXPECT_EQ(report.length_histogram["c"], 1u);

  const auto csv = report_to_csv(report);
  EXPECT_NE(csv.find("histogram,key,count"), std::string::npos);
  EXPECT_NE(csv.find("token_length,3,2"), std::string::npos);
}

TEST(WhitespaceTokens, CountsRuns) {
  EXPECT_EQ(whitespace_token_count(""), 0u);
  EXPECT_EQ(whitespace_token_count("   "), 0u);
  EXPECT_EQ(whitespace_token_count("a b c"), 3u);
  EXPECT_EQ(whitespace_token_count("  a\n\tb   c  "), 3u);
}

TEST(CategorizePool, ParsesScriptedRepliesAndDropsAfterOneReAsk) {
  auto backend = std::make_shared<llm::MockBackend>();
  // instruction 1: parses on first ask; instruction 2: fails twice ->
  // dropped; instruction 3: fails once then parses on the re-ask.
  backend->enqueue("Category: Coding\nComplexity: 7\nLength: (c)");
  backend->enqueue("no fields");
  backend->enqueue("still no fields");
  backend->enqueue("garbled");
  backend->enqueue("Category: Rewriting\nComplexity: 2\nLength: (a)");
  llm::Gateway gateway(backend, llm::GatewayConfig{"", 1});

  std::vector<Instruction> pool = {make_instruction("one", "q1"),
                                   make_instruction("two", "q2"),
                                   make_instruction("three", "q3")};
  auto result = categorize_pool(gateway, pool, "categorizer");

  ASSERT_EQ(result.annotated.size(), 2u);
  EXPECT_EQ(result.annotated[0].instruction.id, "one");
  EXPECT_EQ(result.annotated[0].annotation.category, Category::coding);
  EXPECT_EQ(result.annotated[1].instruction.id, "three");
  EXPECT_EQ(result.annotated[1].annotation.category, Category::rewriting);
  ASSERT_EQ(result.dropped_ids.size(), 1u);
  EXPECT_EQ(result.dropped_ids[0], "two");
}

TEST(CategorizePool, RoundTripsAgainstTheCannedGenerator) {
  auto backend =
      std::make_shared<llm::MockBackend>(llm::canned_generator_handler(11));
  llm::Gateway gateway(backend, llm::GatewayConfig{"", 4});

  std::vector<Instruction> pool;
  for (int i = 0; i < 20; ++i) {
    pool.push_back(
        make_instruction("i" + std::to_string(i), "q" + std::to_string(i)));
  }
  auto result = categorize_pool(gateway, pool, "categorizer");
  EXPECT_EQ(result.annotated.size(), 20u);
  EXPECT_TRUE(result.dropped_ids.empty());
}

}  // namespace
}  // namespace judgekit::curation
