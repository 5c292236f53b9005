#pragma once

// Order-robust pairwise judge evaluation. Every example is judged in
// both response orders; swapped-order verdicts are mapped back into the
// original frame, so a position-biased judge is visible as disagreement
// between the two columns. Absent verdicts count as incorrect in every
// accuracy metric.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "judgekit/gateway.hpp"
#include "judgekit/types.hpp"

namespace judgekit::evaluation {

// ---------------------------------------------------------------------------
// Per-example results

struct OrderPairResult {
  std::string example_id;
  /// Verdict with responses presented in the dataset's order.
  std::optional<Verdict> verdict_fwd;
  /// Verdict with responses swapped, mapped back into the original
  /// frame (a "B" answer to the swapped prompt is recorded as A).
  std::optional<Verdict> verdict_rev;
  Verdict gold = Verdict::A;
  std::optional<std::string> category;

  friend bool operator==(const OrderPairResult&,
                         const OrderPairResult&) = default;
};

OrderedExample swap_responses(const OrderedExample& example);

/// A<->B; involutive, absent stays absent.
std::optional<Verdict> map_back(std::optional<Verdict> swapped_frame_verdict);

enum class TieBreak { absent, prefer_a };

/// Modal present verdict; an exact tie between present counts (or an
/// all-absent list) yields absent unless tie_break says otherwise.
std::optional<Verdict> majority_vote(
    const std::vector<std::optional<Verdict>>& verdicts,
    TieBreak tie_break = TieBreak::absent);

struct JudgeOptions {
  std::string model;
  SamplingParams sampling = sampling_presets::deterministic_eval();
  /// Judgments sampled per order; the per-order verdict is their
  /// majority vote. 1 means a single judgment.
  int votes = 1;
  TieBreak tie_break = TieBreak::absent;
};

/// Queries the judge on the example and on its swapped twin, mapping
/// the swapped verdict back. Gateway failures propagate.
OrderPairResult judge_both_orders(llm::Gateway& gateway,
                                  const OrderedExample& example,
                                  const JudgeOptions& options);

// ---------------------------------------------------------------------------
// Metrics

struct AccuracySummary {
  double acc_fwd = 0.0;
  double acc_rev = 0.0;
  double acc_avg = 0.0;
  std::size_t count = 0;  // zero-count inputs are reported, not errors
};

AccuracySummary average_accuracy(const std::vector<OrderPairResult>& results);

/// Fraction of examples judged correctly under BOTH orders.
double position_consistent_accuracy(const std::vector<OrderPairResult>& results);

enum class HumanLabel { A, B, tie };

std::string to_string(HumanLabel label);
HumanLabel human_label_from_string(std::string_view s);

struct Agreement {
  std::optional<double> rate;  // absent when every label is a tie
  std::size_t denominator = 0;
};

/// Agreement with human labels over non-tie indices; absent predictions
/// count as disagreement. Throws on length mismatch.
Agreement agreement_excluding_ties(
    const std::vector<std::optional<Verdict>>& predictions,
    const std::vector<HumanLabel>& human);

enum class AccuracyMode { forward, average, position_consistent };

std::string to_string(AccuracyMode mode);

struct CategoryReport {
  std::map<std::string, double> per_category;
  double overall = 0.0;
  AccuracyMode mode = AccuracyMode::average;
};

/// Per-category accuracy in the requested mode; overall is the
/// unweighted mean of category accuracies unless a weights map is given.
CategoryReport category_report(
    const std::vector<OrderPairResult>& results, AccuracyMode mode,
    const std::optional<std::map<std::string, double>>& weights = std::nullopt);

struct OrderExtremes {
  double acc_chosen_first = 0.0;
  double acc_chosen_last = 0.0;
  double avg = 0.0;
};

/// Accuracy when the chosen response is always presented first vs always
/// last, and their mean. Each example contributes one observation to
/// each extreme (one of its two orders presents the chosen response
/// first, the other last).
OrderExtremes order_extremes_report(const std::vector<OrderPairResult>& results);

// ---------------------------------------------------------------------------
// Dataset driver

struct EvalItem {
  OrderedExample example;
  std::optional<std::string> category;
  std::optional<HumanLabel> human_label;
};

/// Reads an evaluation JSONL file. Records carry either
/// response_chosen/response_rejected (A/B placement decided by a seeded
/// coin) or response_a/response_b plus an explicit gold verdict.
std::vector<EvalItem> load_eval_dataset(const std::filesystem::path& path,
                                        std::uint64_t order_seed);

enum class AgreementMode { per_order, per_pair };

struct EvalRunReport {
  AccuracySummary accuracy;
  double position_consistent = 0.0;
  OrderExtremes extremes;
  std::optional<CategoryReport> categories;
  std::optional<Agreement> agreement;
  std::size_t errored = 0;
  std::vector<OrderPairResult> results;
};

/// Judges every item in both orders (bounded fan-out), computes all
/// metrics. Items whose gateway calls fail are excluded and counted.
EvalRunReport evaluate_dataset(llm::Gateway& gateway,
                               const std::vector<EvalItem>& items,
                               const JudgeOptions& options,
                               AccuracyMode category_mode = AccuracyMode::average,
                               AgreementMode agreement_mode = AgreementMode::per_order);

nlohmann::json report_to_json(const EvalRunReport& report);
std::string report_to_table(const EvalRunReport& report);

}  // namespace judgekit::evaluation
