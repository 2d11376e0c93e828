#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "folq/bench.hpp"
#include "folq/symbolic.hpp"
#include "helpers.hpp"

using namespace folq;

namespace {

SplitSet toy_splits(uint64_t seed, int entities = 40, int rels = 3,
                    int triples = 170, double holdout = 0.15) {
  Rng rng(seed);
  const test::SplitTexts texts =
      test::random_split_texts(rng, entities, rels, triples, holdout);
  return load_splits(texts.train, texts.valid, texts.test);
}

GenerationConfig small_config(uint64_t seed, int per_type) {
  GenerationConfig cfg;
  cfg.seed = seed;
  cfg.threads = 2;
  for (const auto& tmpl : query_templates()) cfg.counts[tmpl.name] = per_type;
  return cfg;
}

}  // namespace

TEST_CASE("expected_rank tie and filter conventions") {
  SUBCASE("strictly highest score ranks first") {
    const FuzzySet pred{{0.9, 0.1, 0.2}};
    CHECK(expected_rank(pred, 0, std::vector<uint8_t>(3, 0)) == 1.0);
  }
  SUBCASE("all ties over 11 entities gives rank 6") {
    const FuzzySet pred(11, 0.5);
    CHECK(expected_rank(pred, 4, std::vector<uint8_t>(11, 0)) == 6.0);
  }
  SUBCASE("filtering all higher-scored entities gives rank 1") {
    const FuzzySet pred{{0.9, 0.8, 0.4}};
    std::vector<uint8_t> mask = {1, 1, 0};
    CHECK(expected_rank(pred, 2, mask) == 1.0);
  }
  SUBCASE("rank is invariant under monotone transforms") {
    Rng rng(31);
    FuzzySet pred = test::random_fuzzy(rng, 50);
    FuzzySet squashed(50);
    for (size_t i = 0; i < 50; ++i) {
      squashed[i] = 1.0 / (1.0 + std::exp(-4.0 * (pred[i] - 0.5)));
    }
    std::vector<uint8_t> mask(50, 0);
    for (int i = 0; i < 7; ++i) mask[static_cast<size_t>(i * 3 + 1)] = 1;
    for (EntityId a : {0, 6, 12}) {
      CHECK(expected_rank(pred, a, mask) == expected_rank(squashed, a, mask));
    }
  }
  SUBCASE("errors") {
    const FuzzySet pred{{0.5, 0.5}};
    std::vector<uint8_t> mask = {1, 0};
    CHECK_THROWS_AS(expected_rank(pred, 0, mask), Error);
    CHECK_THROWS_AS(expected_rank(pred, 5, mask), Error);
  }
}

TEST_CASE("spearman correlation") {
  const std::vector<double> x = {1, 2, 3, 4, 5};
  const std::vector<double> rev = {5, 4, 3, 2, 1};
  const std::vector<double> y = {2, 1, 5, 3, 4};
  CHECK(spearman_correlation(x, x) == 1.0);
  CHECK(spearman_correlation(x, rev) == -1.0);
  CHECK(spearman_correlation(x, y) ==
        doctest::Approx(spearman_correlation(y, x)));
  CHECK_THROWS_AS(spearman_correlation(x, std::vector<double>{1.0}), Error);
  CHECK_THROWS_AS(
      spearman_correlation(std::vector<double>{1, 1}, std::vector<double>{2, 2}),
      Error);
}

TEST_CASE("cardinality metrics") {
  SUBCASE("exact predictions") {
    std::vector<FuzzySet> preds;
    std::vector<long long> truths;
    Rng rng(8);
    for (int t = 1; t <= 6; ++t) {
      FuzzySet p(30, 0.0);
      for (int i = 0; i < t * 2; ++i) p[static_cast<size_t>(i)] = 1.0;
      preds.push_back(p);
      truths.push_back(t * 2);
    }
    const CardinalityMetrics m = cardinality_metrics(preds, truths);
    CHECK(m.mape == 0.0);
    CHECK(m.spearman == 1.0);
    CHECK(m.excluded == 0);
  }

  SUBCASE("hand arithmetic: counts [8, 30] vs truths [10, 20]") {
    FuzzySet a(40, 0.0), b(40, 0.0);
    for (int i = 0; i < 8; ++i) a[static_cast<size_t>(i)] = 1.0;
    for (int i = 0; i < 30; ++i) b[static_cast<size_t>(i)] = 1.0;
    const std::vector<FuzzySet> preds = {a, b};
    const std::vector<long long> truths = {10, 20};
    const CardinalityMetrics m = cardinality_metrics(preds, truths);
    CHECK(m.mape == doctest::Approx(0.35).epsilon(1e-12));
  }

  SUBCASE("strictly decreasing transform gives rho -1") {
    std::vector<FuzzySet> preds;
    std::vector<long long> truths;
    for (int t = 1; t <= 5; ++t) {
      FuzzySet p(30, 0.0);
      for (int i = 0; i < 12 - 2 * t; ++i) p[static_cast<size_t>(i)] = 1.0;
      preds.push_back(p);
      truths.push_back(t);
    }
    CHECK(cardinality_metrics(preds, truths).spearman == -1.0);
  }

  SUBCASE("zero-truth samples are excluded and counted") {
    std::vector<FuzzySet> preds = {FuzzySet(10, 0.0), FuzzySet(10, 0.9)};
    std::vector<long long> truths = {0, 9};
    const CardinalityMetrics m = cardinality_metrics(preds, truths);
    CHECK(m.excluded == 1);
    CHECK(m.used == 1);
  }
}

TEST_CASE("generated datasets satisfy the sample invariants") {
  const SplitSet splits = toy_splits(2024);
  const Dataset dataset = generate_dataset(splits, small_config(5, 4));

  CHECK(dataset.train.size() == 40);  // 10 trainable types x 4
  CHECK(dataset.valid.size() == 56);  // 14 x 4
  CHECK(dataset.test.size() == 56);

  for (const std::string split : {"train", "valid", "test"}) {
    const auto [smaller, larger] = split_graph_pair(splits, split);
    for (const QuerySample& s : dataset.by_name(split)) {
      // oracle re-check
      const auto easy_oracle = ground_enumerate(s.ast, GraphView(*smaller));
      const auto full_oracle = ground_enumerate(s.ast, GraphView(*larger));
      CHECK(s.easy == easy_oracle);
      CHECK(s.all_answers() == full_oracle);
      std::vector<EntityId> overlap;
      std::set_intersection(s.easy.begin(), s.easy.end(), s.hard.begin(),
                            s.hard.end(), std::back_inserter(overlap));
      CHECK(overlap.empty());
      if (split != "train") CHECK(!s.hard.empty());
      if (split == "train") CHECK(s.hard.empty());
      CHECK(s.all_answers().size() <= 100);
      CHECK(!s.usage.edges_by_node.empty());
    }
  }
}

TEST_CASE("50 samples per type all pass the oracle re-check") {
  const SplitSet splits = toy_splits(2070, 50, 3, 230, 0.15);
  const Dataset dataset = generate_dataset(splits, small_config(23, 50));
  for (const std::string split : {"train", "valid", "test"}) {
    const auto [smaller, larger] = split_graph_pair(splits, split);
    for (const QuerySample& s : dataset.by_name(split)) {
      CHECK(s.easy == ground_enumerate(s.ast, GraphView(*smaller)));
      CHECK(s.all_answers() == ground_enumerate(s.ast, GraphView(*larger)));
      if (split != "train") CHECK(!s.hard.empty());
    }
  }
}

TEST_CASE("generation is deterministic given the seed") {
  const SplitSet splits = toy_splits(9);
  const Dataset a = generate_dataset(splits, small_config(3, 2));
  const Dataset b = generate_dataset(splits, small_config(3, 2));
  CHECK(samples_to_jsonl(a.test, *splits.vocab) ==
        samples_to_jsonl(b.test, *splits.vocab));

  GenerationConfig other = small_config(4, 2);
  const Dataset c = generate_dataset(splits, other);
  CHECK(samples_to_jsonl(a.test, *splits.vocab) !=
        samples_to_jsonl(c.test, *splits.vocab));
}

TEST_CASE("degenerate splits cannot produce hard answers") {
  const std::string text = "a\tr\tb\nb\tr\tc\nc\tr\ta\n";
  const SplitSet splits = load_splits(text, text, text);
  GenerationConfig cfg;
  cfg.seed = 1;
  cfg.attempts = 30;
  cfg.counts["1p"] = 1;
  CHECK_THROWS_WITH_AS(generate_dataset(splits, cfg),
                       doctest::Contains("1p"), Error);
}

TEST_CASE("a test-only edge yields a hard answer for its 1p query") {
  const std::string train = "a\tr\tb\n";
  const std::string test_text = train + "a\tr\tc\n";
  const SplitSet splits = load_splits(train, train, test_text);
  QuerySample s;
  s.qtype = "1p";
  s.ast = parse_query("(P r fwd (E a))", *splits.vocab);
  s.easy = ground_enumerate(s.ast, GraphView(*splits.valid));
  const auto full = ground_enumerate(s.ast, GraphView(*splits.test));
  std::vector<EntityId> hard;
  std::set_difference(full.begin(), full.end(), s.easy.begin(), s.easy.end(),
                      std::back_inserter(hard));
  REQUIRE(hard.size() == 1);
  CHECK(hard[0] == *splits.vocab->entity("c"));
}

TEST_CASE("evaluate arithmetic") {
  SUBCASE("single hard answer ranked first") {
    QuerySample s;
    s.qtype = "1p";
    s.ast.add_anchor(0);
    s.hard = {2};
    FuzzySet pred(5, 0.1);
    pred[2] = 0.9;
    const MetricsReport report =
        evaluate(std::vector<QuerySample>{s}, std::vector<FuzzySet>{pred});
    CHECK(report.per_type.at("1p").mrr == 1.0);
    CHECK(report.per_type.at("1p").h1 == 1.0);
    CHECK(report.avg_p == 1.0);
    CHECK(report.avg_n == 0.0);  // no negation types present
  }

  SUBCASE("ranks 1 and 4 give sample MRR 0.625 and H@3 0.5") {
    QuerySample s;
    s.qtype = "2i";
    s.ast.add_anchor(0);
    s.hard = {0, 1};
    // entity 0 ranked 1st; entity 1 ranked 4th among non-answers
    FuzzySet pred{{0.95, 0.4, 0.7, 0.6, 0.5, 0.1}};
    const MetricsReport report =
        evaluate(std::vector<QuerySample>{s}, std::vector<FuzzySet>{pred});
    CHECK(report.per_type.at("2i").mrr == doctest::Approx(0.625));
    CHECK(report.per_type.at("2i").h3 == 0.5);
    CHECK(report.per_type.at("2i").h1 == 0.5);
  }

  SUBCASE("empty hard set is rejected") {
    QuerySample s;
    s.qtype = "1p";
    s.ast.add_anchor(0);
    s.easy = {0};
    CHECK_THROWS_WITH_AS(evaluate(std::vector<QuerySample>{s},
                                  std::vector<FuzzySet>{FuzzySet(3, 0.5)}),
                         doctest::Contains("hard"), Error);
  }

  SUBCASE("misaligned inputs are rejected") {
    CHECK_THROWS_AS(
        evaluate(std::vector<QuerySample>{}, std::vector<FuzzySet>{FuzzySet(1)}),
        Error);
  }
}

TEST_CASE("indicator predictions with sub-threshold noise score perfectly") {
  const SplitSet splits = toy_splits(33);
  GenerationConfig cfg = small_config(7, 2);
  const Dataset dataset = generate_dataset(splits, cfg);

  Rng rng(55);
  std::vector<FuzzySet> preds;
  for (const QuerySample& s : dataset.test) {
    FuzzySet pred(splits.vocab->num_entities());
    for (auto& v : pred.values) v = rng.uniform() * 0.4;
    for (EntityId a : s.all_answers()) pred[static_cast<size_t>(a)] = 1.0;
    preds.push_back(std::move(pred));
  }
  const MetricsReport report = evaluate(dataset.test, preds);
  for (const auto& [type, m] : report.per_type) {
    CHECK(m.mrr == 1.0);
    CHECK(m.h1 == 1.0);
  }
}

TEST_CASE("jsonl round trip") {
  const SplitSet splits = toy_splits(77);
  const Dataset dataset = generate_dataset(splits, small_config(11, 2));
  const std::string text = samples_to_jsonl(dataset.valid, *splits.vocab);
  const auto loaded = samples_from_jsonl(text, *splits.vocab);
  REQUIRE(loaded.size() == dataset.valid.size());
  for (size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].qtype == dataset.valid[i].qtype);
    CHECK(equivalent(loaded[i].ast, dataset.valid[i].ast));
    CHECK(loaded[i].easy == dataset.valid[i].easy);
    CHECK(loaded[i].hard == dataset.valid[i].hard);
  }
  CHECK_THROWS_AS(samples_from_jsonl("not json\n", *splits.vocab), Error);
}

TEST_CASE("inspect labels nodes from the split pair") {
  const KnowledgeGraph g = load_triples(test::academic_triples());
  const GraphView view(g);
  QuerySample s;
  s.qtype = "2i";
  s.ast = parse_query(
      "(AND (P Win inv (E TuringAward)) (P Field inv (E DeepLearning)))",
      g.vocab());
  s.easy = ground_enumerate(s.ast, view);
  s.hard = {};

  SymbolicProjector projector;
  const PostfixProgram program = compile_postfix(s.ast);
  ExecutionTrace trace;
  execute(program, projector, view, &trace);

  const std::string report = inspect(s, trace, view, view, g.vocab());
  CHECK(report.find("false-positive: -") != std::string::npos);
  CHECK(report.find("Hinton") != std::string::npos);
  CHECK(report.find("type: 2i") != std::string::npos);
  // boolean trace from the complete graph: no false positives anywhere
  CHECK(report.find("false-positive: ") != std::string::npos);
  size_t pos = 0;
  while ((pos = report.find("false-positive:", pos)) != std::string::npos) {
    const size_t eol = report.find('\n', pos);
    CHECK(report.substr(pos, eol - pos) == "false-positive: -");
    pos = eol;
  }
}

TEST_CASE("inspect marks hard entities from the larger graph") {
  const std::string train = "a\tr\tb\n";
  const std::string bigger = train + "a\tr\tc\n";
  const SplitSet splits = load_splits(train, bigger, bigger);

  QuerySample s;
  s.qtype = "1p";
  s.ast = parse_query("(P r fwd (E a))", *splits.vocab);
  s.easy = ground_enumerate(s.ast, GraphView(*splits.train));
  const auto full = ground_enumerate(s.ast, GraphView(*splits.valid));
  std::set_difference(full.begin(), full.end(), s.easy.begin(), s.easy.end(),
                      std::back_inserter(s.hard));

  // a perfect oracle prediction: execute on the larger graph
  SymbolicProjector projector;
  const PostfixProgram program = compile_postfix(s.ast);
  ExecutionTrace trace;
  execute(program, projector, GraphView(*splits.valid), &trace);
  const std::string report = inspect(s, trace, GraphView(*splits.train),
                                     GraphView(*splits.valid), *splits.vocab);
  CHECK(report.find("hard: c (1.000)") != std::string::npos);
  CHECK(report.find("easy: b (1.000)") != std::string::npos);
}

TEST_CASE("symbolic predictions on the complete graph rank hard answers first") {
  // artificial easy/hard labeling over a complete evaluation graph: the
  // tied 1.0 block consists entirely of answers, which the filter removes
  const SplitSet splits = toy_splits(101);
  const Dataset dataset = generate_dataset(splits, small_config(17, 2));
  SymbolicProjector projector;
  const auto preds = predict_all(dataset.test, projector,
                                 GraphView(*splits.test), 16);
  const MetricsReport report = evaluate(dataset.test, preds);
  for (const auto& [type, m] : report.per_type) {
    CHECK(m.mrr == 1.0);
    CHECK(m.h1 == 1.0);
  }
}

TEST_CASE("inspect on a 3p chain matches hand enumeration") {
  const KnowledgeGraph g = load_triples(test::academic_triples());
  const GraphView view(g);
  QuerySample s;
  s.qtype = "3p";
  s.ast = parse_query(
      "(P University fwd (P Win inv (P Win fwd (E Hinton))))", g.vocab());
  s.easy = ground_enumerate(s.ast, view);

  SymbolicProjector projector;
  ExecutionTrace trace;
  execute(compile_postfix(s.ast), projector, view, &trace);
  const std::string report = inspect(s, trace, view, view, g.vocab());

  // hop 1: Win(Hinton) = {TuringAward}; hop 2: winners of it; hop 3: their
  // universities
  CHECK(report.find("easy: TuringAward (1.000)") != std::string::npos);
  CHECK(report.find("Bengio") != std::string::npos);
  CHECK(report.find("UofT") != std::string::npos);
  CHECK(report.find("UdeM") != std::string::npos);
  CHECK(report.find("Princeton") == std::string::npos);
}

TEST_CASE("all_answer_mrr is 1 for exact boolean predictions") {
  const SplitSet splits = toy_splits(91);
  const Dataset dataset = generate_dataset(splits, small_config(13, 2));
  SymbolicProjector projector;
  const auto preds = predict_all(dataset.train, projector,
                                 GraphView(*splits.train), 16);
  CHECK(all_answer_mrr(dataset.train, preds) == 1.0);
}
