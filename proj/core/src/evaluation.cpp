#include "judgekit/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "judgekit/annotation.hpp"
#include "judgekit/jsonl.hpp"
#include "judgekit/rng.hpp"

namespace judgekit::evaluation {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Orders and votes

OrderedExample swap_responses(const OrderedExample& example) {
  OrderedExample swapped = example;
  std::swap(swapped.response_a, swapped.response_b);
  swapped.gold = opposite(example.gold);
  return swapped;
}

std::optional<Verdict> map_back(std::optional<Verdict> swapped_frame_verdict) {
  if (!swapped_frame_verdict) return std::nullopt;
  return opposite(*swapped_frame_verdict);
}

std::optional<Verdict> majority_vote(
    const std::vector<std::optional<Verdict>>& verdicts, TieBreak tie_break) {
  if (verdicts.empty()) {
    throw ConfigError("majority_vote requires a non-empty verdict list");
  }
  std::size_t count_a = 0;
  std::size_t count_b = 0;
  for (const auto& v : verdicts) {
    if (!v) continue;
    (*v == Verdict::A ? count_a : count_b) += 1;
  }
  if (count_a > count_b) return Verdict::A;
  if (count_b > count_a) return Verdict::B;
  if (tie_break == TieBreak::prefer_a && count_a + count_b > 0) {
    return Verdict::A;
  }
  return std::nullopt;
}

namespace {

std::optional<Verdict> judge_one_order(llm::Gateway& gateway,
                                       const OrderedExample& example,
                                       const JudgeOptions& options) {
  auto samples = annotation::sample_judgments(
      gateway, example, options.model, options.votes,
      options.sampling.with_n(options.votes));
  std::vector<std::optional<Verdict>> verdicts;
  verdicts.reserve(samples.size());
  for (const auto& s : samples) {
    verdicts.push_back(s.verdict);
  }
  return majority_vote(verdicts, options.tie_break);
}

}  // namespace

OrderPairResult judge_both_orders(llm::Gateway& gateway,
                                  const OrderedExample& example,
                                  const JudgeOptions& options) {
  OrderPairResult result;
  result.example_id = example.example_id;
  result.gold = example.gold;
  result.verdict_fwd = judge_one_order(gateway, example, options);
  result.verdict_rev =
      map_back(judge_one_order(gateway, swap_responses(example), options));
  return result;
}

// ---------------------------------------------------------------------------
// Metrics

namespace {

bool correct(const std::optional<Verdict>& verdict, Verdict gold) {
  return verdict.has_value() && *verdict == gold;
}

}  // namespace

AccuracySummary average_accuracy(const std::vector<OrderPairResult>& results) {
  AccuracySummary summary;
  summary.count = results.size();
  if (results.empty()) {
    return summary;
  }
  std::size_t fwd = 0;
  std::size_t rev = 0;
  for (const auto& r : results) {
    if (correct(r.verdict_fwd, r.gold)) ++fwd;
    if (correct(r.verdict_rev, r.gold)) ++rev;
  }
  const double n = static_cast<double>(results.size());
  summary.acc_fwd = static_cast<double>(fwd) / n;
  summary.acc_rev = static_cast<double>(rev) / n;
  summary.acc_avg = (summary.acc_fwd + summary.acc_rev) / 2.0;
  return summary;
}

double position_consistent_accuracy(const std::vector<OrderPairResult>& results) {
  if (results.empty()) return 0.0;
  std::size_t both = 0;
  for (const auto& r : results) {
    if (correct(r.verdict_fwd, r.gold) && correct(r.verdict_rev, r.gold)) {
      ++both;
    }
  }
  return static_cast<double>(both) / static_cast<double>(results.size());
}

std::string to_string(HumanLabel label) {
  switch (label) {
    case HumanLabel::A: return "A";
    case HumanLabel::B: return "B";
    case HumanLabel::tie: return "tie";
  }
  throw ValidationError("bad HumanLabel value");
}

HumanLabel human_label_from_string(std::string_view s) {
  if (s == "A") return HumanLabel::A;
  if (s == "B") return HumanLabel::B;
  if (s == "tie") return HumanLabel::tie;
  throw ValidationError("unknown human label: " + std::string(s));
}

Agreement agreement_excluding_ties(
    const std::vector<std::optional<Verdict>>& predictions,
    const std::vector<HumanLabel>& human) {
  if (predictions.size() != human.size()) {
    throw ConfigError("predictions and human labels differ in length");
  }
  Agreement agreement;
  std::size_t matches = 0;
  for (std::size_t i = 0; i < human.size(); ++i) {
    if (human[i] == HumanLabel::tie) continue;
    ++agreement.denominator;
    const Verdict target = human[i] == HumanLabel::A ? Verdict::A : Verdict::B;
    if (correct(predictions[i], target)) ++matches;
  }
  if (agreement.denominator > 0) {
    agreement.rate =
        static_cast<double>(matches) / static_cast<double>(agreement.denominator);
  }
  return agreement;
}

std::string to_string(AccuracyMode mode) {
  switch (mode) {
    case AccuracyMode::forward: return "forward";
    case AccuracyMode::average: return "average";
    case AccuracyMode::position_consistent: return "position-consistent";
  }
  throw ValidationError("bad AccuracyMode value");
}

namespace {

double mode_accuracy(const std::vector<OrderPairResult>& results,
                     AccuracyMode mode) {
  switch (mode) {
    case AccuracyMode::forward: {
      if (results.empty()) return 0.0;
      std::size_t fwd = 0;
      for (const auto& r : results) {
        if (correct(r.verdict_fwd, r.gold)) ++fwd;
      }
      return static_cast<double>(fwd) / static_cast<double>(results.size());
    }
    case AccuracyMode::average:
      return average_accuracy(results).acc_avg;
    case AccuracyMode::position_consistent:
      return position_consistent_accuracy(results);
  }
  throw ValidationError("bad AccuracyMode value");
}

}  // namespace

CategoryReport category_report(
    const std::vector<OrderPairResult>& results, AccuracyMode mode,
    const std::optional<std::map<std::string, double>>& weights) {
  std::map<std::string, std::vector<OrderPairResult>> by_category;
  for (const auto& r : results) {
    if (!r.category) {
      throw ConfigError("result " + r.example_id +
                        " has no category; per-category report needs one");
    }
    by_category[*r.category].push_back(r);
  }

  CategoryReport report;
  report.mode = mode;
  for (const auto& [category, rows] : by_category) {
    report.per_category[category] = mode_accuracy(rows, mode);
  }

  if (weights) {
    for (const auto& [category, weight] : *weights) {
      (void)weight;
      if (!report.per_category.count(category)) {
        throw ConfigError("weights map names unknown category: " + category);
      }
    }
    double weighted = 0.0;
    double total_weight = 0.0;
    for (const auto& [category, accuracy] : report.per_category) {
      auto it = weights->find(category);
      const double w = it != weights->end() ? it->second : 0.0;
      weighted += w * accuracy;
      total_weight += w;
    }
    report.overall = total_weight > 0.0 ? weighted / total_weight : 0.0;
  } else if (!report.per_category.empty()) {
    double sum = 0.0;
    for (const auto& [category, accuracy] : report.per_category) {
      sum += accuracy;
    }
    report.overall = sum / static_cast<double>(report.per_category.size());
  }
  return report;
}

OrderExtremes order_extremes_report(const std::vector<OrderPairResult>& results) {
  OrderExtremes extremes;
  if (results.empty()) return extremes;
  std::size_t first_correct = 0;
  std::size_t last_correct = 0;
  for (const auto& r : results) {
    // The forward order presents the chosen response first iff gold is A;
    // the reverse observation presents it in the other slot.
    const bool fwd_ok = correct(r.verdict_fwd, r.gold);
    const bool rev_ok = correct(r.verdict_rev, r.gold);
    if (r.gold == Verdict::A) {
      first_correct += fwd_ok ? 1 : 0;
      last_correct += rev_ok ? 1 : 0;
    } else {
      first_correct += rev_ok ? 1 : 0;
      last_correct += fwd_ok ? 1 : 0;
    }
  }
  const double n = static_cast<double>(results.size());
  extremes.acc_chosen_first = static_cast<double>(first_correct) / n;
  extremes.acc_chosen_last = static_cast<double>(last_correct) / n;
  extremes.avg = (extremes.acc_chosen_first + extremes.acc_chosen_last) / 2.0;
  return extremes;
}

// ---------------------------------------------------------------------------
// Dataset driver

std::vector<EvalItem> load_eval_dataset(const std::filesystem::path& path,
                                        std::uint64_t order_seed) {
  std::vector<EvalItem> items;
  std::size_t line_no = 0;
  for (const auto& j : jsonl::read_raw(path)) {
    ++line_no;
    EvalItem item;
    Instruction instruction;
    const auto& field = j.at("instruction");
    if (field.is_string()) {
      std::string id = j.value("id", "eval-" + std::to_string(line_no));
      instruction = Instruction::single(id, field.get<std::string>(),
                                        j.value("source", ""));
    } else {
      instruction = field.get<Instruction>();
    }

    OrderedExample example;
    example.instruction = instruction;
    example.example_id = instruction.id;
    example.order_seed = static_cast<std::int64_t>(order_seed);
    if (j.contains("response_chosen") && j.contains("response_rejected")) {
      const auto chosen = j.at("response_chosen").get<std::string>();
      const auto rejected = j.at("response_rejected").get<std::string>();
      const std::uint64_t coin =
          rng::mix(order_seed, rng::fnv1a64(instruction.id));
      const bool chosen_first = (coin & 1) == 0;
      example.response_a = chosen_first ? chosen : rejected;
      example.response_b = chosen_first ? rejected : chosen;
      example.gold = chosen_first ? Verdict::A : Verdict::B;
    } else if (j.contains("response_a") && j.contains("response_b") &&
               j.contains("gold")) {
      example.response_a = j.at("response_a").get<std::string>();
      example.response_b = j.at("response_b").get<std::string>();
      example.gold = verdict_from_string(j.at("gold").get<std::string>());
    } else {
      throw IoError(path.string() + ":" + std::to_string(line_no) +
                    ": record needs response_chosen/response_rejected or "
                    "response_a/response_b with gold");
    }
    validate(example);
    item.example = std::move(example);

    if (j.contains("category")) {
      item.category = j.at("category").get<std::string>();
    }
    if (j.contains("human_label")) {
      item.human_label =
          human_label_from_string(j.at("human_label").get<std::string>());
    }
    items.push_back(std::move(item));
  }
  return items;
}

EvalRunReport evaluate_dataset(llm::Gateway& gateway,
                               const std::vector<EvalItem>& items,
                               const JudgeOptions& options,
                               AccuracyMode category_mode,
                               AgreementMode agreement_mode) {
  struct Row {
    std::optional<OrderPairResult> result;
    std::optional<HumanLabel> human;
  };

  auto rows = llm::parallel_map(
      items, gateway.parallelism(), [&](const EvalItem& item, std::size_t) -> Row {
        try {
          auto result = judge_both_orders(gateway, item.example, options);
          result.category = item.category;
          return Row{std::move(result), item.human_label};
        } catch (const GatewayError&) {
          return Row{std::nullopt, item.human_label};
        }
      });

  EvalRunReport report;
  std::vector<std::optional<Verdict>> fwd_predictions;
  std::vector<std::optional<Verdict>> rev_predictions;
  std::vector<std::optional<Verdict>> pair_predictions;
  std::vector<HumanLabel> human;
  bool all_categorized = !items.empty();
  for (auto& row : rows) {
    if (!row.result) {
      ++report.errored;
      continue;
    }
    if (!row.result->category) all_categorized = false;
    if (row.human) {
      fwd_predictions.push_back(row.result->verdict_fwd);
      rev_predictions.push_back(row.result->verdict_rev);
      // per-pair: commit only when both orders agree
      pair_predictions.push_back(row.result->verdict_fwd == row.result->verdict_rev
                                     ? row.result->verdict_fwd
                                     : std::nullopt);
      human.push_back(*row.human);
    }
    report.results.push_back(std::move(*row.result));
  }

  report.accuracy = average_accuracy(report.results);
  report.position_consistent = position_consistent_accuracy(report.results);
  report.extremes = order_extremes_report(report.results);
  if (all_categorized && !report.results.empty()) {
    report.categories = category_report(report.results, category_mode);
  }
  if (!human.empty()) {
    if (agreement_mode == AgreementMode::per_order) {
      auto fwd = agreement_excluding_ties(fwd_predictions, human);
      auto rev = agreement_excluding_ties(rev_predictions, human);
      Agreement combined;
      combined.denominator = fwd.denominator;
      if (fwd.rate && rev.rate) {
        combined.rate = (*fwd.rate + *rev.rate) / 2.0;
      }
      report.agreement = combined;
    } else {
      report.agreement = agreement_excluding_ties(pair_predictions, human);
    }
  }
  return report;
}

json report_to_json(const EvalRunReport& report) {
  json j;
  j["count"] = report.accuracy.count;
  j["errored"] = report.errored;
  j["acc_fwd"] = report.accuracy.acc_fwd;
  j["acc_rev"] = report.accuracy.acc_rev;
  j["acc_avg"] = report.accuracy.acc_avg;
  j["position_consistent_acc"] = report.position_consistent;
  j["acc_chosen_first"] = report.extremes.acc_chosen_first;
  j["acc_chosen_last"] = report.extremes.acc_chosen_last;
  j["acc_order_extremes_avg"] = report.extremes.avg;
  if (report.categories) {
    j["category_mode"] = to_string(report.categories->mode);
    j["per_category"] = report.categories->per_category;
    j["overall"] = report.categories->overall;
  }
  if (report.agreement) {
    j["agreement_denominator"] = report.agreement->denominator;
    if (report.agreement->rate) {
      j["agreement_rate"] = *report.agreement->rate;
    }
  }
  return j;
}

std::string report_to_table(const EvalRunReport& report) {
  std::ostringstream out;
  auto pct = [](double v) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(1);
    s << v * 100.0;
    return s.str();
  };
  out << "examples evaluated : " << report.accuracy.count << "\n";
  if (report.errored > 0) {
    out << "examples errored   : " << report.errored << "\n";
  }
  out << "accuracy fwd / rev : " << pct(report.accuracy.acc_fwd) << " / "
      << pct(report.accuracy.acc_rev) << "\n";
  out << "accuracy avg       : " << pct(report.accuracy.acc_avg) << "\n";
  out << "position-consistent: " << pct(report.position_consistent) << "\n";
  out << "chosen first / last: " << pct(report.extremes.acc_chosen_first)
      << " / " << pct(report.extremes.acc_chosen_last)
      << "  (avg " << pct(report.extremes.avg) << ")\n";
  if (report.categories) {
    out << "per-category (" << to_string(report.categories->mode) << "):\n";
    for (const auto& [category, accuracy] : report.categories->per_category) {
      out << "  " << category << ": " << pct(accuracy) << "\n";
    }
    out << "overall            : " << pct(report.categories->overall) << "\n";
  }
  if (report.agreement) {
    out << "human agreement    : ";
    if (report.agreement->rate) {
      out << pct(*report.agreement->rate) << " over "
          << report.agreement->denominator << " non-tie labels\n";
    } else {
      out << "undefined (all labels are ties)\n";
    }
  }
  return out.str();
}

}  // namespace judgekit::evaluation
