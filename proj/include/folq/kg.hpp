#pragma once

#include <array>
#include <istream>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "folq/common.hpp"

namespace folq {

/// Dense, first-appearance-ordered entity and relation dictionaries.
/// Relation ids cover original relations only; edge-relation ids double the
/// space, with inverse(r) = r + |R| for r < |R|.
class Vocabulary {
 public:
  EntityId add_entity(std::string_view name);
  RelationId add_relation(std::string_view name);

  std::optional<EntityId> entity(std::string_view name) const;
  std::optional<RelationId> relation(std::string_view name) const;

  const std::string& entity_name(EntityId id) const;
  const std::string& relation_name(RelationId id) const;
  /// Display name for an edge-relation id; inverse ids get a "^-1" suffix.
  std::string edge_relation_name(RelationId edge_rel) const;

  size_t num_entities() const { return entity_names_.size(); }
  size_t num_relations() const { return relation_names_.size(); }
  size_t num_edge_relations() const { return 2 * relation_names_.size(); }

 private:
  std::vector<std::string> entity_names_;
  std::vector<std::string> relation_names_;
  std::unordered_map<std::string, EntityId> entity_ids_;
  std::unordered_map<std::string, RelationId> relation_ids_;
};

struct Edge {
  EntityId head;
  RelationId rel;  // edge-relation id in [0, 2|R|)
  EntityId tail;

  bool operator==(const Edge&) const = default;
};

using Triple = std::array<EntityId, 3>;  // head, relation (< |R|), tail

/// Immutable triple store. Each original triplet is materialized as a
/// forward edge plus its inverse twin; edges are kept sorted by
/// (tail, rel, head) so that the inbound adjacency of a node is one
/// contiguous slice and the per-relation sub-slice is binary-searchable.
class KnowledgeGraph {
 public:
  KnowledgeGraph(std::shared_ptr<const Vocabulary> vocab,
                 std::vector<Triple> triples);

  const Vocabulary& vocab() const { return *vocab_; }
  std::shared_ptr<const Vocabulary> vocab_ptr() const { return vocab_; }

  size_t num_entities() const { return vocab_->num_entities(); }
  size_t num_relations() const { return vocab_->num_relations(); }
  size_t num_edge_relations() const { return vocab_->num_edge_relations(); }
  size_t num_edges() const { return edges_.size(); }
  size_t num_triples() const { return edges_.size() / 2; }

  std::span<const Edge> edges() const { return edges_; }
  const Edge& edge(EdgeId id) const;

  RelationId inverse_relation(RelationId edge_rel) const;
  EdgeId inverse_edge(EdgeId id) const { return inverse_edge_.at(checked(id)); }

  /// Slice [first, last) of edge ids with the given tail.
  std::pair<EdgeId, EdgeId> in_range(EntityId tail) const;
  /// Sub-slice restricted to one edge-relation.
  std::pair<EdgeId, EdgeId> in_range(EntityId tail, RelationId rel) const;

  /// Whether (head, rel, tail) is present, rel an edge-relation id.
  bool has_edge(EntityId head, RelationId rel, EntityId tail) const;

  /// Original triplets as "head\trel\ttail" lines, lexicographically sorted.
  std::vector<std::string> to_triple_lines() const;

 private:
  size_t checked(EdgeId id) const;

  std::shared_ptr<const Vocabulary> vocab_;
  std::vector<Edge> edges_;            // sorted by (tail, rel, head)
  std::vector<EdgeId> tail_offsets_;   // size |V|+1
  std::vector<EdgeId> inverse_edge_;   // twin edge id per edge
};

/// Read-only overlay that hides a set of edges. Copies are cheap; the mask
/// is shared and immutable.
class GraphView {
 public:
  /// Empty view; must be assigned before use.
  GraphView() = default;
  explicit GraphView(const KnowledgeGraph& graph);
  GraphView(const KnowledgeGraph& graph, std::span<const EdgeId> masked);

  const KnowledgeGraph& graph() const {
    if (!graph_) raise("graph view: not bound to a graph");
    return *graph_;
  }
  size_t num_entities() const { return graph_->num_entities(); }

  bool is_masked(EdgeId id) const {
    return mask_ && (*mask_)[static_cast<size_t>(id)] != 0;
  }
  size_t masked_count() const { return masked_count_; }
  size_t unmasked_edge_count() const {
    return graph_->num_edges() - masked_count_;
  }

  /// Unmasked edges (head, rel, tail) into `tail`, all relations, in
  /// (rel, head)-ascending order. f(const Edge&, EdgeId).
  template <typename F>
  void for_in_edges(EntityId tail, F&& f) const {
    const auto [first, last] = graph_->in_range(tail);
    for (EdgeId id = first; id < last; ++id) {
      if (is_masked(id)) continue;
      f(graph_->edge(id), id);
    }
  }

  /// Unmasked (head, edge-id) pairs for edges (head, rel, tail), ascending
  /// by head id.
  std::vector<std::pair<EntityId, EdgeId>> incoming(EntityId tail,
                                                    RelationId rel) const;

 private:
  const KnowledgeGraph* graph_ = nullptr;
  std::shared_ptr<const std::vector<uint8_t>> mask_;  // null means empty
  size_t masked_count_ = 0;
};

/// Parse tab-separated head/relation/tail lines. '#'-prefixed lines and
/// blank lines are ignored; duplicates are dropped.
KnowledgeGraph load_triples(std::string_view text);
KnowledgeGraph load_triples_file(const std::string& path);

/// The raw (deduplicated, order-preserving) triple names of a file;
/// building block for load_splits.
std::vector<std::array<std::string, 3>> parse_triple_lines(
    std::string_view text, const std::string& source_name = "<input>");

struct SplitSet {
  std::shared_ptr<const Vocabulary> vocab;
  std::shared_ptr<const KnowledgeGraph> train;
  std::shared_ptr<const KnowledgeGraph> valid;
  std::shared_ptr<const KnowledgeGraph> test;

  const KnowledgeGraph& by_name(std::string_view split) const;
};

/// Build the three split graphs over a shared union vocabulary and verify
/// triplets(train) <= triplets(valid) <= triplets(test).
SplitSet load_splits(const std::string& train_text,
                     const std::string& valid_text,
                     const std::string& test_text);

/// Load a JSON manifest {"train": path, "valid": path, "test": path};
/// relative paths resolve against the manifest's directory.
SplitSet load_splits_manifest(const std::string& manifest_path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace folq
