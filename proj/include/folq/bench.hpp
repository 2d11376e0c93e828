#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "folq/fuzzy.hpp"
#include "folq/kg.hpp"
#include "folq/query.hpp"
#include "folq/symbolic.hpp"
#include "folq/vm.hpp"

namespace folq {

/// One benchmark query: easy answers are reachable on the split's observed
/// (smaller) graph, hard answers only on the larger one.
struct QuerySample {
  std::string qtype;
  QueryAST ast;
  std::vector<EntityId> easy;  // sorted
  std::vector<EntityId> hard;  // sorted
  EdgeUsageRecord usage;       // on the graph the query was sampled from

  std::vector<EntityId> all_answers() const;
};

struct GenerationConfig {
  std::map<std::string, int> counts;  // per type; absent means zero
  int max_answers = 100;
  int attempts = 2000;  // rejection budget per sample
  uint64_t seed = 0;
  int threads = 1;
};

struct Dataset {
  std::vector<QuerySample> train, valid, test;

  std::vector<QuerySample>& by_name(std::string_view split);
  const std::vector<QuerySample>& by_name(std::string_view split) const;
};

/// Observed (smaller) and answer (larger) graph per split: train/(train,
/// train), valid/(train, valid), test/(valid, test).
std::pair<const KnowledgeGraph*, const KnowledgeGraph*> split_graph_pair(
    const SplitSet& splits, std::string_view split);

/// Rejection-sampled query instantiation per type. Train queries are fully
/// answerable on the training graph; valid/test queries must own at least
/// one hard answer.
Dataset generate_dataset(const SplitSet& splits, const GenerationConfig& cfg);

/// Filtered expected rank with half credit for score ties. filter_mask
/// marks entities excluded from the candidate pool; the answer itself is
/// excluded implicitly and must not be marked.
double expected_rank(const FuzzySet& pred, EntityId answer,
                     const std::vector<uint8_t>& filter_mask);

struct TypeMetrics {
  size_t count = 0;
  double mrr = 0.0;
  double h1 = 0.0;
  double h3 = 0.0;
  double h10 = 0.0;
  double mape = 0.0;
  double spearman = 0.0;
};

struct MetricsReport {
  std::map<std::string, TypeMetrics> per_type;
  double avg_p = 0.0;  // mean MRR over EPFO types present
  double avg_n = 0.0;  // mean MRR over negation types present
  double avg_all = 0.0;
  double mape = 0.0;
  double spearman = 0.0;
  size_t mape_excluded = 0;
};

/// Ranking + cardinality metrics over hard answers, macro-averaged per type.
MetricsReport evaluate(std::span<const QuerySample> samples,
                       std::span<const FuzzySet> preds);

struct CardinalityMetrics {
  double mape = 0.0;
  double spearman = 0.0;
  size_t used = 0;
  size_t excluded = 0;  // samples with zero ground-truth count
};

/// MAPE of cardinality(pred, 0.5) against true counts plus Spearman rank
/// correlation (average ranks for ties).
CardinalityMetrics cardinality_metrics(std::span<const FuzzySet> preds,
                                       std::span<const long long> truths);

/// Spearman rank correlation with average-rank tie handling.
double spearman_correlation(std::span<const double> a,
                            std::span<const double> b);

/// MRR over all answers (easy and hard alike), each filtered against the
/// remaining answers. Training-progress measure; evaluate() is the
/// benchmark-protocol path.
double all_answer_mrr(std::span<const QuerySample> samples,
                      std::span<const FuzzySet> preds);

/// Per-node report of a captured execution: top easy/hard/false-positive
/// entities above probability 0.1 for every AST node, labels derived by
/// grounding the node's sub-query on the smaller vs larger graph.
std::string inspect(const QuerySample& sample, const ExecutionTrace& trace,
                    const GraphView& smaller, const GraphView& larger,
                    const Vocabulary& vocab);

std::string metrics_to_json(const MetricsReport& report);
std::string metrics_to_markdown(const MetricsReport& report);

/// One JSON object per line: {"type", "query", "easy", "hard"}.
std::string samples_to_jsonl(std::span<const QuerySample> samples,
                             const Vocabulary& vocab);
/// Usage records are not serialized; reload leaves them empty.
std::vector<QuerySample> samples_from_jsonl(std::string_view text,
                                            const Vocabulary& vocab);

/// Batched predictions for a list of samples on one view.
std::vector<FuzzySet> predict_all(std::span<const QuerySample> samples,
                                  Projector& projector, const GraphView& view,
                                  size_t batch_size);

extern const std::vector<std::string> kEpfoTypes;
extern const std::vector<std::string> kNegationTypes;

}  // namespace folq
