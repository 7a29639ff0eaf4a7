#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "matrag/corpus.hpp"
#include "matrag/transparency.hpp"

namespace matrag {

struct RankedList {
  std::string user_id;
  std::vector<std::string> items;
  std::string truth;

  // Throws ValidationError for an empty or duplicated list.
  void validate() const;
};

// 1-based rank of the truth item, nullopt if absent.
std::optional<std::size_t> truth_rank(const RankedList& ranked);

double hit_rate(const RankedList& ranked, std::size_t k);
// Single-relevant form: 1/log2(rank+1) within the cutoff.
double ndcg(const RankedList& ranked, std::size_t k);
double mrr(const RankedList& ranked);

// Case-fold and whitespace-split after removing evidence tags.
std::vector<std::string> bleu_tokens(std::string_view s);
// Unsmoothed sentence BLEU-4 with clipped n-gram precision and brevity penalty
// against the closest reference length.
double bleu4(std::string_view candidate, std::span<const std::string> references);

// Scores candidate items for a user; higher ranks first.
using ScoreFn = std::function<std::vector<double>(const std::string& user_id,
                                                  std::span<const std::string> items)>;

struct ExplainedCase {
  std::string text;
  std::optional<TransparencyScore> transparency;
};
using ExplainFn =
    std::function<std::optional<ExplainedCase>(const std::string& user_id, const std::string& item_id)>;

struct EvalOptions {
  std::size_t negatives = 99;
  std::vector<std::size_t> ks{5, 10};
  std::uint64_t seed = 0;
  SplitPart part = SplitPart::test;
  // Skip users without train interactions.
  bool require_train_history = true;
  std::size_t parallelism = 1;
  double explain_fraction = 0.0;
};

struct EvalRow {
  std::string user_id;
  std::string item_id;
  std::size_t rank = 0;        // 1-based rank of the truth among the candidates
  std::size_t candidates = 0;  // truth + sampled negatives
  std::vector<double> hit;     // per cutoff
  std::vector<double> ndcg;    // per cutoff
  double mrr = 0.0;
  std::string activity;        // low | mid | high
};

struct MetricMean {
  double mean = 0.0;
  std::size_t count = 0;
};

struct ExplanationSummary {
  std::size_t count = 0;
  std::size_t scored = 0;
  double faithfulness = 0.0;
  double coherence = 0.0;
  double personalization = 0.0;
  double composite = 0.0;
  std::size_t bleu_count = 0;
  double bleu4 = 0.0;
};

struct EvalReport {
  std::vector<std::size_t> ks;
  std::size_t negatives = 0;
  std::uint64_t seed = 0;
  std::string label;
  std::size_t skipped = 0;
  std::vector<EvalRow> rows;
  // "HR@10", "NDCG@10", "MRR", ...
  std::map<std::string, MetricMean> means;
  std::map<std::string, std::map<std::string, MetricMean>> by_activity;
  std::optional<ExplanationSummary> explanations;

  double metric(std::string_view name) const;
  std::string to_json() const;
  std::string to_table() const;
  // "<user>\t<metric>\t<value>" per row and metric.
  std::string rows_tsv() const;
};

// Leave-one-out ranking of each held-out interaction against negatives drawn
// uniformly from items the user never interacted with. Ties rank by item id.
EvalReport evaluate(const ScoreFn& scorer, const InteractionStore& store,
                    const SplitAssignment& split, const EvalOptions& options,
                    const ExplainFn& explainer = nullptr);

// Draws `count` distinct items from `pool` minus `exclude`, seeded.
std::vector<std::string> sample_negatives(std::span<const std::string> pool,
                                          const std::vector<std::string>& exclude_sorted,
                                          std::size_t count, std::uint64_t seed);

}  // namespace matrag
