#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "folq/kg.hpp"
#include "folq/rng.hpp"
#include "helpers.hpp"

using namespace folq;

TEST_CASE("load_triples basics") {
  const KnowledgeGraph g = load_triples(
      "a\tr\tb\n"
      "a\ts\tc\n"
      "b\tr\td\n");
  CHECK(g.num_entities() == 4);
  CHECK(g.num_relations() == 2);
  CHECK(g.num_edges() == 6);  // inverse augmentation
  CHECK(g.num_triples() == 3);

  // first-appearance ordering
  CHECK(g.vocab().entity_name(0) == "a");
  CHECK(g.vocab().entity_name(1) == "b");
  CHECK(g.vocab().relation_name(0) == "r");
  CHECK(g.vocab().relation_name(1) == "s");
}

TEST_CASE("duplicates are dropped") {
  const KnowledgeGraph once = load_triples("a\tr\tb\n");
  const KnowledgeGraph twice = load_triples("a\tr\tb\na\tr\tb\n");
  CHECK(once.num_edges() == twice.num_edges());
  CHECK(once.to_triple_lines() == twice.to_triple_lines());
}

TEST_CASE("parse errors") {
  CHECK_THROWS_WITH_AS(load_triples("a b\n"),
                       doctest::Contains("line 1"), Error);
  CHECK_THROWS_WITH_AS(load_triples("a\tr\tb\nx\ty\n"),
                       doctest::Contains("line 2"), Error);
  CHECK_THROWS_AS(load_triples(""), Error);
  CHECK_THROWS_AS(load_triples("# only a comment\n"), Error);
}

TEST_CASE("comments and blank lines ignored") {
  const KnowledgeGraph g = load_triples("# header\n\na\tr\tb\n");
  CHECK(g.num_triples() == 1);
}

TEST_CASE("inverse pairing invariant") {
  Rng rng(5);
  const KnowledgeGraph g = test::random_graph(rng, 12, 3, 30);
  const auto num_rel = static_cast<RelationId>(g.num_relations());
  for (size_t e = 0; e < g.num_edges(); ++e) {
    const Edge& edge = g.edge(static_cast<EdgeId>(e));
    const EdgeId twin_id = g.inverse_edge(static_cast<EdgeId>(e));
    const Edge& twin = g.edge(twin_id);
    CHECK(twin.head == edge.tail);
    CHECK(twin.tail == edge.head);
    CHECK(twin.rel == (edge.rel < num_rel ? edge.rel + num_rel
                                          : edge.rel - num_rel));
    CHECK(g.inverse_edge(twin_id) == static_cast<EdgeId>(e));
  }
}

TEST_CASE("round-trip to sorted triple lines") {
  Rng rng(6);
  const std::string text = test::random_triple_text(rng, 10, 3, 40);
  const KnowledgeGraph g = load_triples(text);

  std::set<std::string> expected;
  size_t pos = 0;
  while (pos < text.size()) {
    const size_t eol = text.find('\n', pos);
    expected.insert(text.substr(pos, eol - pos));
    pos = eol + 1;
  }
  const auto lines = g.to_triple_lines();
  CHECK(std::set<std::string>(lines.begin(), lines.end()) == expected);
  CHECK(std::is_sorted(lines.begin(), lines.end()));
}

TEST_CASE("incoming edges") {
  // graph {(0,r,1),(2,r,1)} ==> tails of r into 1 are heads [0,2]
  const KnowledgeGraph g = load_triples("a\tr\tb\nc\tr\tb\n");
  const GraphView view(g);
  const auto in = view.incoming(1, 0);
  REQUIRE(in.size() == 2);
  CHECK(in[0].first == 0);
  CHECK(in[1].first == 2);

  SUBCASE("masking hides an edge") {
    const std::vector<EdgeId> mask = {in[0].second};
    const GraphView masked(g, mask);
    const auto rest = masked.incoming(1, 0);
    REQUIRE(rest.size() == 1);
    CHECK(rest[0].first == 2);
    CHECK(masked.unmasked_edge_count() == g.num_edges() - 1);
  }

  SUBCASE("no inbound edges of a relation") {
    CHECK(view.incoming(0, 0).empty());
  }

  CHECK_THROWS_AS(view.incoming(99, 0), Error);
  CHECK_THROWS_AS(view.incoming(0, 99), Error);
}

TEST_CASE("in_index covers every edge exactly once") {
  Rng rng(7);
  const KnowledgeGraph g = test::random_graph(rng, 15, 4, 60);
  const GraphView view(g);
  size_t total = 0;
  std::set<EdgeId> seen;
  for (EntityId v = 0; v < static_cast<EntityId>(g.num_entities()); ++v) {
    for (RelationId r = 0; r < static_cast<RelationId>(g.num_edge_relations());
         ++r) {
      for (const auto& [head, id] : view.incoming(v, r)) {
        CHECK(g.edge(id).head == head);
        CHECK(g.edge(id).tail == v);
        CHECK(g.edge(id).rel == r);
        CHECK(seen.insert(id).second);
        ++total;
      }
    }
  }
  CHECK(total == g.num_edges());
}

TEST_CASE("empty mask view is identical to base") {
  Rng rng(8);
  const KnowledgeGraph g = test::random_graph(rng, 10, 2, 25);
  const GraphView base(g);
  const GraphView masked(g, std::vector<EdgeId>{});
  CHECK(masked.unmasked_edge_count() == g.num_edges());
  for (EntityId v = 0; v < static_cast<EntityId>(g.num_entities()); ++v) {
    for (RelationId r = 0;
         r < static_cast<RelationId>(g.num_edge_relations()); ++r) {
      CHECK(base.incoming(v, r) == masked.incoming(v, r));
    }
  }
}

TEST_CASE("load_splits") {
  const std::string train = "a\tr\tb\nc\tr\td\n";
  const std::string valid = train + "a\tr\td\n";
  const std::string test_text = valid + "d\tr\ta\n";

  const SplitSet splits = load_splits(train, valid, test_text);
  CHECK(splits.train->num_triples() == 2);
  CHECK(splits.valid->num_triples() == 3);
  CHECK(splits.test->num_triples() == 4);
  CHECK(splits.train->vocab_ptr() == splits.test->vocab_ptr());

  SUBCASE("subset violation reports the offending triplet") {
    CHECK_THROWS_WITH_AS(load_splits(train, "a\tr\tb\n", test_text),
                         doctest::Contains("c\tr\td"), Error);
  }

  SUBCASE("identical files are a valid degenerate split") {
    const SplitSet same = load_splits(train, train, train);
    CHECK(same.train->num_triples() == same.test->num_triples());
  }
}

TEST_CASE("split manifest file") {
  test::TempDir dir("manifest");
  write_file(dir.str("train.txt"), "a\tr\tb\n");
  write_file(dir.str("valid.txt"), "a\tr\tb\nb\tr\tc\n");
  write_file(dir.str("test.txt"), "a\tr\tb\nb\tr\tc\nc\tr\ta\n");
  write_file(dir.str("manifest.json"),
             R"({"train": "train.txt", "valid": "valid.txt", "test": "test.txt"})");
  const SplitSet splits = load_splits_manifest(dir.str("manifest.json"));
  CHECK(splits.test->num_triples() == 3);

  write_file(dir.str("bad.json"), R"({"train": "train.txt"})");
  CHECK_THROWS_WITH_AS(load_splits_manifest(dir.str("bad.json")),
                       doctest::Contains("missing split"), Error);
}
