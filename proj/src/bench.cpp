#include "folq/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "folq/rng.hpp"
#include "folq/threading.hpp"

namespace folq {

const std::vector<std::string> kEpfoTypes = {"1p", "2p", "3p", "2i", "3i",
                                             "pi", "ip", "2u", "up"};
const std::vector<std::string> kNegationTypes = {"2in", "3in", "inp", "pin",
                                                 "pni"};

std::vector<EntityId> QuerySample::all_answers() const {
  std::vector<EntityId> all;
  all.reserve(easy.size() + hard.size());
  std::set_union(easy.begin(), easy.end(), hard.begin(), hard.end(),
                 std::back_inserter(all));
  return all;
}

std::vector<QuerySample>& Dataset::by_name(std::string_view split) {
  if (split == "train") return train;
  if (split == "valid") return valid;
  if (split == "test") return test;
  raise("unknown split name '", split, "'");
}

const std::vector<QuerySample>& Dataset::by_name(std::string_view split) const {
  return const_cast<Dataset*>(this)->by_name(split);
}

std::pair<const KnowledgeGraph*, const KnowledgeGraph*> split_graph_pair(
    const SplitSet& splits, std::string_view split) {
  if (split == "train") return {splits.train.get(), splits.train.get()};
  if (split == "valid") return {splits.train.get(), splits.valid.get()};
  if (split == "test") return {splits.valid.get(), splits.test.get()};
  raise("unknown split name '", split, "'");
}

namespace {

// Grounds the skeleton placeholders by walking backwards from a target
// entity: projections follow a random incoming edge, AND grounds both sides
// at the target, OR one random side, NOT is unconstrained. Guarantees
// nothing by itself; the caller re-checks every constraint with the oracle.
bool ground_skeleton(const QueryAST& skel, NodeId node, EntityId target,
                     const KnowledgeGraph& graph, Rng& rng,
                     std::vector<EntityId>& anchors,
                     std::vector<RelationId>& relations) {
  const QueryNode& n = skel.node(node);
  switch (n.kind) {
    case NodeKind::kAnchor:
      anchors[static_cast<size_t>(n.entity)] = target;
      return true;
    case NodeKind::kProjection: {
      const auto [first, last] = graph.in_range(target);
      if (first == last) return false;
      const EdgeId pick =
          first + static_cast<EdgeId>(rng.uniform_int(
                      static_cast<uint64_t>(last - first)));
      const Edge& e = graph.edge(pick);
      relations[static_cast<size_t>(n.relation)] = e.rel;
      return ground_skeleton(skel, n.child0, e.head, graph, rng, anchors,
                             relations);
    }
    case NodeKind::kAnd:
      return ground_skeleton(skel, n.child0, target, graph, rng, anchors,
                             relations) &&
             ground_skeleton(skel, n.child1, target, graph, rng, anchors,
                             relations);
    case NodeKind::kOr: {
      const bool left_first = rng.bernoulli(0.5);
      const EntityId other = static_cast<EntityId>(
          rng.uniform_int(static_cast<uint64_t>(graph.num_entities())));
      const NodeId grounded = left_first ? n.child0 : n.child1;
      const NodeId free_side = left_first ? n.child1 : n.child0;
      return ground_skeleton(skel, grounded, target, graph, rng, anchors,
                             relations) &&
             ground_skeleton(skel, free_side, other, graph, rng, anchors,
                             relations);
    }
    case NodeKind::kNot: {
      const EntityId other = static_cast<EntityId>(
          rng.uniform_int(static_cast<uint64_t>(graph.num_entities())));
      return ground_skeleton(skel, n.child0, other, graph, rng, anchors,
                             relations);
    }
  }
  return false;
}

std::vector<EntityId> set_difference_ids(const std::vector<EntityId>& big,
                                         const std::vector<EntityId>& small) {
  std::vector<EntityId> diff;
  std::set_difference(big.begin(), big.end(), small.begin(), small.end(),
                      std::back_inserter(diff));
  return diff;
}

bool try_generate_sample(const QueryTypeTemplate& tmpl, bool needs_hard,
                         const KnowledgeGraph& smaller,
                         const KnowledgeGraph& larger, int max_answers,
                         Rng& rng, QuerySample& out) {
  std::vector<EntityId> anchors(static_cast<size_t>(tmpl.num_anchors), 0);
  std::vector<RelationId> relations(static_cast<size_t>(tmpl.num_relations),
                                    0);
  const EntityId target = static_cast<EntityId>(
      rng.uniform_int(static_cast<uint64_t>(larger.num_entities())));
  if (!ground_skeleton(tmpl.skeleton, tmpl.skeleton.root, target, larger, rng,
                       anchors, relations)) {
    return false;
  }
  QueryAST ast = instantiate_template(tmpl, anchors, relations);
  const GraphView larger_view(larger);
  const std::vector<EntityId> answers = ground_enumerate(ast, larger_view);
  if (answers.empty() ||
      answers.size() > static_cast<size_t>(max_answers)) {
    return false;
  }
  std::vector<EntityId> easy;
  std::vector<EntityId> hard;
  if (needs_hard) {
    easy = ground_enumerate(ast, GraphView(smaller));
    // Negation branches can drop answers when the graph grows; such
    // queries cannot satisfy easy + hard = answers(larger), so reject.
    if (!std::includes(answers.begin(), answers.end(), easy.begin(),
                       easy.end())) {
      return false;
    }
    hard = set_difference_ids(answers, easy);
    if (hard.empty()) return false;
  } else {
    easy = answers;
  }
  out.qtype = tmpl.name;
  out.ast = std::move(ast);
  out.easy = std::move(easy);
  out.hard = std::move(hard);
  out.usage = collect_traversed_edges(out.ast, larger_view);
  return true;
}

}  // namespace

Dataset generate_dataset(const SplitSet& splits, const GenerationConfig& cfg) {
  if (cfg.max_answers < 1) raise("generate: max_answers must be >= 1");
  Dataset dataset;
  const Rng base(cfg.seed);
  const std::vector<std::string> split_names = {"train", "valid", "test"};

  for (size_t split_idx = 0; split_idx < split_names.size(); ++split_idx) {
    const std::string& split = split_names[split_idx];
    const auto [smaller, larger] = split_graph_pair(splits, split);
    const bool needs_hard = split != "train";
    auto& out = dataset.by_name(split);

    struct Task {
      const QueryTypeTemplate* tmpl;
      size_t type_idx;
      size_t index;
    };
    std::vector<Task> tasks;
    size_t type_idx = 0;
    for (const QueryTypeTemplate& tmpl : query_templates()) {
      ++type_idx;
      if (split == "train" && !tmpl.trainable) continue;
      auto it = cfg.counts.find(tmpl.name);
      const int count = it == cfg.counts.end() ? 0 : it->second;
      for (int j = 0; j < count; ++j) {
        tasks.push_back({&tmpl, type_idx, static_cast<size_t>(j)});
      }
    }

    std::vector<QuerySample> samples(tasks.size());
    const Rng split_rng = base.fork(split_idx);
    parallel_for(tasks.size(), cfg.threads, [&](size_t i) {
      const Task& task = tasks[i];
      Rng rng = split_rng.fork(task.type_idx).fork(task.index);
      bool ok = false;
      for (int attempt = 0; attempt < cfg.attempts && !ok; ++attempt) {
        ok = try_generate_sample(*task.tmpl, needs_hard, *smaller, *larger,
                                 cfg.max_answers, rng, samples[i]);
      }
      if (!ok) {
        raise("generate: exhausted ", cfg.attempts, " attempts for type '",
              task.tmpl->name, "' in split '", split, "'");
      }
    });
    out = std::move(samples);
  }
  return dataset;
}

double expected_rank(const FuzzySet& pred, EntityId answer,
                     const std::vector<uint8_t>& filter_mask) {
  if (answer < 0 || static_cast<size_t>(answer) >= pred.size()) {
    raise("expected_rank: answer id out of range");
  }
  if (filter_mask.size() != pred.size()) {
    raise("expected_rank: filter mask size mismatch");
  }
  if (filter_mask[static_cast<size_t>(answer)]) {
    raise("expected_rank: answer must not be filtered out");
  }
  const double score = pred[static_cast<size_t>(answer)];
  size_t higher = 0;
  size_t equal = 0;
  for (size_t v = 0; v < pred.size(); ++v) {
    if (filter_mask[v] || v == static_cast<size_t>(answer)) continue;
    if (pred[v] > score) {
      ++higher;
    } else if (pred[v] == score) {
      ++equal;
    }
  }
  return 1.0 + static_cast<double>(higher) + 0.5 * static_cast<double>(equal);
}

double spearman_correlation(std::span<const double> a,
                            std::span<const double> b) {
  if (a.size() != b.size()) raise("spearman: length mismatch");
  const size_t n = a.size();
  if (n < 2) raise("spearman: need at least 2 observations");

  auto ranks = [n](std::span<const double> xs) {
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&xs](size_t i, size_t j) { return xs[i] < xs[j]; });
    std::vector<double> rank(n, 0.0);
    size_t i = 0;
    while (i < n) {
      size_t j = i;
      while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
      const double avg = (static_cast<double>(i) + static_cast<double>(j)) /
                             2.0 +
                         1.0;
      for (size_t k = i; k <= j; ++k) rank[order[k]] = avg;
      i = j + 1;
    }
    return rank;
  };

  const std::vector<double> ra = ranks(a);
  const std::vector<double> rb = ranks(b);
  double mean_a = 0.0, mean_b = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mean_a += ra[i];
    mean_b += rb[i];
  }
  mean_a /= static_cast<double>(n);
  mean_b /= static_cast<double>(n);
  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double da = ra[i] - mean_a;
    const double db = rb[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a == 0.0 || var_b == 0.0) {
    raise("spearman: zero rank variance");
  }
  return cov / std::sqrt(var_a * var_b);
}

CardinalityMetrics cardinality_metrics(std::span<const FuzzySet> preds,
                                       std::span<const long long> truths) {
  if (preds.size() != truths.size()) {
    raise("cardinality_metrics: length mismatch");
  }
  CardinalityMetrics result;
  std::vector<double> predicted, truth;
  double err_sum = 0.0;
  for (size_t i = 0; i < preds.size(); ++i) {
    if (truths[i] <= 0) {
      ++result.excluded;
      continue;
    }
    const auto card = cardinality(preds[i], 0.5);
    err_sum += std::abs(static_cast<double>(card - truths[i])) /
               static_cast<double>(truths[i]);
    predicted.push_back(static_cast<double>(card));
    truth.push_back(static_cast<double>(truths[i]));
  }
  result.used = predicted.size();
  if (result.used == 0) raise("cardinality_metrics: no usable samples");
  result.mape = err_sum / static_cast<double>(result.used);
  auto varies = [](const std::vector<double>& xs) {
    for (double x : xs) {
      if (x != xs.front()) return true;
    }
    return false;
  };
  if (result.used >= 2 && varies(predicted) && varies(truth)) {
    result.spearman = spearman_correlation(predicted, truth);
  } else if (result.used >= 2) {
    // A constant side leaves the rank correlation undefined.
    result.spearman = std::numeric_limits<double>::quiet_NaN();
  } else {
    result.spearman = 1.0;
  }
  return result;
}

namespace {

struct RankStats {
  double mrr = 0.0, h1 = 0.0, h3 = 0.0, h10 = 0.0;
};

RankStats sample_rank_stats(const FuzzySet& pred,
                            const std::vector<EntityId>& targets,
                            const std::vector<EntityId>& filter_base) {
  std::vector<uint8_t> mask(pred.size(), 0);
  for (EntityId e : filter_base) mask[static_cast<size_t>(e)] = 1;
  RankStats stats;
  for (EntityId answer : targets) {
    mask[static_cast<size_t>(answer)] = 0;
    const double rank = expected_rank(pred, answer, mask);
    mask[static_cast<size_t>(answer)] = 1;
    stats.mrr += 1.0 / rank;
    stats.h1 += rank <= 1.0 ? 1.0 : 0.0;
    stats.h3 += rank <= 3.0 ? 1.0 : 0.0;
    stats.h10 += rank <= 10.0 ? 1.0 : 0.0;
  }
  const double inv = 1.0 / static_cast<double>(targets.size());
  stats.mrr *= inv;
  stats.h1 *= inv;
  stats.h3 *= inv;
  stats.h10 *= inv;
  return stats;
}

}  // namespace

MetricsReport evaluate(std::span<const QuerySample> samples,
                       std::span<const FuzzySet> preds) {
  if (samples.size() != preds.size()) {
    raise("evaluate: ", samples.size(), " samples but ", preds.size(),
          " predictions");
  }
  struct Accumulator {
    size_t count = 0;
    RankStats sum;
    std::vector<double> pred_cards, true_cards;
  };
  std::map<std::string, Accumulator> per_type;
  std::vector<FuzzySet const*> all_preds;
  std::vector<long long> all_truths;

  for (size_t i = 0; i < samples.size(); ++i) {
    const QuerySample& s = samples[i];
    if (s.hard.empty()) {
      raise("evaluate: sample ", i, " (", s.qtype, ") has no hard answers");
    }
    const auto filter = s.all_answers();
    const RankStats stats = sample_rank_stats(preds[i], s.hard, filter);
    auto& acc = per_type[s.qtype];
    ++acc.count;
    acc.sum.mrr += stats.mrr;
    acc.sum.h1 += stats.h1;
    acc.sum.h3 += stats.h3;
    acc.sum.h10 += stats.h10;
    const auto card = cardinality(preds[i], 0.5);
    const auto truth = static_cast<long long>(filter.size());
    acc.pred_cards.push_back(static_cast<double>(card));
    acc.true_cards.push_back(static_cast<double>(truth));
    all_preds.push_back(&preds[i]);
    all_truths.push_back(truth);
  }

  MetricsReport report;
  for (auto& [type, acc] : per_type) {
    TypeMetrics m;
    m.count = acc.count;
    const double inv = 1.0 / static_cast<double>(acc.count);
    m.mrr = acc.sum.mrr * inv;
    m.h1 = acc.sum.h1 * inv;
    m.h3 = acc.sum.h3 * inv;
    m.h10 = acc.sum.h10 * inv;
    double err = 0.0;
    for (size_t i = 0; i < acc.pred_cards.size(); ++i) {
      err += std::abs(acc.pred_cards[i] - acc.true_cards[i]) /
             acc.true_cards[i];
    }
    m.mape = err * inv;
    bool tie_free = acc.count >= 2;
    if (tie_free) {
      const double first = acc.true_cards.front();
      bool varies = false;
      for (double t : acc.true_cards) varies |= t != first;
      const double pfirst = acc.pred_cards.front();
      bool pvaries = false;
      for (double p : acc.pred_cards) pvaries |= p != pfirst;
      tie_free = varies && pvaries;
    }
    m.spearman = tie_free
                     ? spearman_correlation(acc.pred_cards, acc.true_cards)
                     : std::numeric_limits<double>::quiet_NaN();
    report.per_type[type] = m;
  }

  auto group_average = [&report](const std::vector<std::string>& names) {
    double sum = 0.0;
    size_t n = 0;
    for (const auto& name : names) {
      auto it = report.per_type.find(name);
      if (it == report.per_type.end()) continue;
      sum += it->second.mrr;
      ++n;
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
  };
  report.avg_p = group_average(kEpfoTypes);
  report.avg_n = group_average(kNegationTypes);
  double total = 0.0;
  for (const auto& [type, m] : report.per_type) total += m.mrr;
  report.avg_all = report.per_type.empty()
                       ? 0.0
                       : total / static_cast<double>(report.per_type.size());

  std::vector<FuzzySet> pred_copies;  // cardinality_metrics wants a span
  pred_copies.reserve(all_preds.size());
  for (const FuzzySet* p : all_preds) pred_copies.push_back(*p);
  const CardinalityMetrics card = cardinality_metrics(pred_copies, all_truths);
  report.mape = card.mape;
  report.spearman = card.spearman;
  report.mape_excluded = card.excluded;
  return report;
}

double all_answer_mrr(std::span<const QuerySample> samples,
                      std::span<const FuzzySet> preds) {
  if (samples.size() != preds.size()) raise("all_answer_mrr: length mismatch");
  if (samples.empty()) raise("all_answer_mrr: no samples");
  double total = 0.0;
  for (size_t i = 0; i < samples.size(); ++i) {
    const auto answers = samples[i].all_answers();
    if (answers.empty()) raise("all_answer_mrr: sample without answers");
    total += sample_rank_stats(preds[i], answers, answers).mrr;
  }
  return total / static_cast<double>(samples.size());
}

namespace {

std::string format_prob(double p) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", p);
  return buf;
}

}  // namespace

std::string inspect(const QuerySample& sample, const ExecutionTrace& trace,
                    const GraphView& smaller, const GraphView& larger,
                    const Vocabulary& vocab) {
  constexpr double kMinProb = 0.1;
  constexpr size_t kEasyShown = 3;
  constexpr size_t kHardShown = 6;
  constexpr size_t kFalseShown = 6;

  const PostfixProgram program = compile_postfix(sample.ast);
  std::ostringstream out;
  out << "query: " << render_query(sample.ast, vocab) << "\n";
  out << "type: " << sample.qtype << "\n";

  for (const Instruction& ins : program.code) {
    const NodeId node = ins.node;
    const FuzzySet& values = trace.at(node);
    const auto easy_ids = ground_enumerate_node(sample.ast, node, smaller);
    const auto large_ids = ground_enumerate_node(sample.ast, node, larger);
    const auto hard_ids = set_difference_ids(large_ids, easy_ids);

    std::vector<uint8_t> is_easy(values.size(), 0), is_hard(values.size(), 0);
    for (EntityId e : easy_ids) is_easy[static_cast<size_t>(e)] = 1;
    for (EntityId e : hard_ids) is_hard[static_cast<size_t>(e)] = 1;

    const auto ranked = top_k(values, values.size(), kMinProb);
    std::vector<std::string> easy_col, hard_col, false_col;
    for (const auto& [id, prob] : ranked) {
      const std::string entry =
          concat(vocab.entity_name(id), " (", format_prob(prob), ")");
      if (is_easy[static_cast<size_t>(id)]) {
        if (easy_col.size() < kEasyShown) easy_col.push_back(entry);
      } else if (is_hard[static_cast<size_t>(id)]) {
        if (hard_col.size() < kHardShown) hard_col.push_back(entry);
      } else if (false_col.size() < kFalseShown) {
        false_col.push_back(entry);
      }
    }

    out << "node " << node << ": "
        << render_subquery(sample.ast, node, vocab) << "\n";
    auto emit = [&out](const char* label,
                       const std::vector<std::string>& col) {
      out << "  " << label << ":";
      if (col.empty()) {
        out << " -";
      } else {
        for (size_t i = 0; i < col.size(); ++i) {
          out << (i == 0 ? " " : ", ") << col[i];
        }
      }
      out << "\n";
    };
    emit("easy", easy_col);
    emit("hard", hard_col);
    emit("false-positive", false_col);
  }
  return out.str();
}

namespace {

nlohmann::ordered_json type_metrics_json(const TypeMetrics& m) {
  nlohmann::ordered_json j;
  j["count"] = m.count;
  j["mrr"] = m.mrr;
  j["h1"] = m.h1;
  j["h3"] = m.h3;
  j["h10"] = m.h10;
  j["mape"] = m.mape;
  if (std::isnan(m.spearman)) {
    j["spearman"] = nullptr;
  } else {
    j["spearman"] = m.spearman;
  }
  return j;
}

}  // namespace

std::string metrics_to_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["avg_p"] = report.avg_p;
  j["avg_n"] = report.avg_n;
  j["avg_all"] = report.avg_all;
  j["mape"] = report.mape;
  j["spearman"] = report.spearman;
  j["mape_excluded"] = report.mape_excluded;
  nlohmann::ordered_json types;
  for (const QueryTypeTemplate& tmpl : query_templates()) {
    auto it = report.per_type.find(tmpl.name);
    if (it == report.per_type.end()) continue;
    types[tmpl.name] = type_metrics_json(it->second);
  }
  j["types"] = std::move(types);
  return j.dump(2) + "\n";
}

std::string metrics_to_markdown(const MetricsReport& report) {
  std::ostringstream out;
  auto pct = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", v * 100.0);
    return std::string(buf);
  };
  out << "| metric | avg_p | avg_n |";
  for (const QueryTypeTemplate& tmpl : query_templates()) {
    if (report.per_type.count(tmpl.name)) out << " " << tmpl.name << " |";
  }
  out << "\n|---|---|---|";
  for (const QueryTypeTemplate& tmpl : query_templates()) {
    if (report.per_type.count(tmpl.name)) out << "---|";
  }
  out << "\n| MRR (%) | " << pct(report.avg_p) << " | " << pct(report.avg_n)
      << " |";
  for (const QueryTypeTemplate& tmpl : query_templates()) {
    auto it = report.per_type.find(tmpl.name);
    if (it == report.per_type.end()) continue;
    out << " " << pct(it->second.mrr) << " |";
  }
  out << "\n";
  return out.str();
}

std::string samples_to_jsonl(std::span<const QuerySample> samples,
                             const Vocabulary& vocab) {
  std::string out;
  for (const QuerySample& s : samples) {
    nlohmann::ordered_json j;
    j["type"] = s.qtype;
    j["query"] = render_query(s.ast, vocab);
    j["easy"] = s.easy;
    j["hard"] = s.hard;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<QuerySample> samples_from_jsonl(std::string_view text,
                                            const Vocabulary& vocab) {
  std::vector<QuerySample> samples;
  size_t pos = 0;
  size_t line_no = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      raise("dataset line ", line_no, ": ", e.what());
    }
    QuerySample s;
    try {
      s.qtype = j.at("type").get<std::string>();
      s.ast = parse_query(j.at("query").get<std::string>(), vocab);
      s.easy = j.at("easy").get<std::vector<EntityId>>();
      s.hard = j.at("hard").get<std::vector<EntityId>>();
    } catch (const nlohmann::json::exception& e) {
      raise("dataset line ", line_no, ": ", e.what());
    }
    try {
      template_by_name(s.qtype);
    } catch (const Error& e) {
      raise("dataset line ", line_no, ": ", e.what());
    }
    std::sort(s.easy.begin(), s.easy.end());
    s.easy.erase(std::unique(s.easy.begin(), s.easy.end()), s.easy.end());
    std::sort(s.hard.begin(), s.hard.end());
    s.hard.erase(std::unique(s.hard.begin(), s.hard.end()), s.hard.end());
    const auto num_entities = static_cast<EntityId>(vocab.num_entities());
    for (const auto* ids : {&s.easy, &s.hard}) {
      for (EntityId id : *ids) {
        if (id < 0 || id >= num_entities) {
          raise("dataset line ", line_no, ": entity id ", id,
                " out of range");
        }
      }
    }
    std::vector<EntityId> overlap;
    std::set_intersection(s.easy.begin(), s.easy.end(), s.hard.begin(),
                          s.hard.end(), std::back_inserter(overlap));
    if (!overlap.empty()) {
      raise("dataset line ", line_no, ": entity ", overlap.front(),
            " is listed as both easy and hard");
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

std::vector<FuzzySet> predict_all(std::span<const QuerySample> samples,
                                  Projector& projector, const GraphView& view,
                                  size_t batch_size) {
  if (batch_size == 0) batch_size = 1;
  std::vector<FuzzySet> preds(samples.size());
  std::vector<PostfixProgram> programs;
  std::vector<GraphView> views;
  for (size_t start = 0; start < samples.size(); start += batch_size) {
    const size_t count = std::min(batch_size, samples.size() - start);
    programs.clear();
    views.clear();
    for (size_t i = 0; i < count; ++i) {
      programs.push_back(compile_postfix(samples[start + i].ast));
      views.push_back(view);
    }
    auto outputs = execute_batch(programs, projector, views);
    for (size_t i = 0; i < count; ++i) preds[start + i] = std::move(outputs[i]);
  }
  return preds;
}

}  // namespace folq
