#include "folq/symbolic.hpp"

#include <algorithm>

namespace folq {

FuzzySet traverse_project(const FuzzySet& x, RelationId rel,
                          const GraphView& view) {
  const KnowledgeGraph& graph = view.graph();
  if (x.size() != graph.num_entities()) {
    raise("traverse_project: fuzzy set size ", x.size(),
          " does not match entity count ", graph.num_entities());
  }
  FuzzySet out(x.size(), 0.0);
  const auto num_entities = static_cast<EntityId>(graph.num_entities());
  for (EntityId v = 0; v < num_entities; ++v) {
    const auto [first, last] = graph.in_range(v, rel);
    double best = 0.0;
    for (EdgeId id = first; id < last; ++id) {
      if (view.is_masked(id)) continue;
      best = std::max(best, x[static_cast<size_t>(graph.edge(id).head)]);
    }
    out[static_cast<size_t>(v)] = best;
  }
  return out;
}

void SymbolicProjector::project(std::span<const Request> requests,
                                std::span<FuzzySet> out) {
  for (size_t i = 0; i < requests.size(); ++i) {
    out[i] = traverse_project(*requests[i].input, requests[i].relation,
                              *requests[i].view);
  }
}

void SymbolicProjector::project_captured(
    std::span<const Request> requests, std::span<FuzzySet> out,
    std::span<std::shared_ptr<ProjectionTape>> tapes) {
  project(requests, out);
  for (auto& tape : tapes) tape.reset();
}

size_t EdgeUsageRecord::total_edges() const {
  size_t total = 0;
  for (const auto& [node, edges] : edges_by_node) total += edges.size();
  return total;
}

namespace {

using BoolSet = std::vector<uint8_t>;

void check_guard(const GraphView& view, const char* op) {
  if (view.num_entities() > kGroundEnumerateMaxEntities) {
    raise(op, ": refusing exhaustive enumeration on ", view.num_entities(),
          " entities (limit ", kGroundEnumerateMaxEntities, ")");
  }
}

// Recursive Boolean set semantics over the raw edge list; the relational
// image scans all edges rather than going through the inbound index, to
// stay independent of the indexed traversal path.
BoolSet enumerate_node(const QueryAST& ast, NodeId id, const GraphView& view,
                       EdgeUsageRecord* usage) {
  const QueryNode& n = ast.node(id);
  const size_t num_entities = view.num_entities();
  switch (n.kind) {
    case NodeKind::kAnchor: {
      if (n.entity < 0 || static_cast<size_t>(n.entity) >= num_entities) {
        raise("ground enumerate: anchor entity ", n.entity, " out of range");
      }
      BoolSet s(num_entities, 0);
      s[static_cast<size_t>(n.entity)] = 1;
      return s;
    }
    case NodeKind::kProjection: {
      const BoolSet input = enumerate_node(ast, n.child0, view, usage);
      BoolSet out(num_entities, 0);
      std::vector<EdgeId>* record = nullptr;
      if (usage) record = &usage->edges_by_node[id];
      const auto edges = view.graph().edges();
      for (size_t e = 0; e < edges.size(); ++e) {
        const Edge& edge = edges[e];
        if (edge.rel != n.relation) continue;
        if (view.is_masked(static_cast<EdgeId>(e))) continue;
        if (!input[static_cast<size_t>(edge.head)]) continue;
        out[static_cast<size_t>(edge.tail)] = 1;
        if (record) record->push_back(static_cast<EdgeId>(e));
      }
      return out;
    }
    case NodeKind::kAnd: {
      BoolSet left = enumerate_node(ast, n.child0, view, usage);
      const BoolSet right = enumerate_node(ast, n.child1, view, usage);
      for (size_t i = 0; i < left.size(); ++i) left[i] &= right[i];
      return left;
    }
    case NodeKind::kOr: {
      BoolSet left = enumerate_node(ast, n.child0, view, usage);
      const BoolSet right = enumerate_node(ast, n.child1, view, usage);
      for (size_t i = 0; i < left.size(); ++i) left[i] |= right[i];
      return left;
    }
    case NodeKind::kNot: {
      BoolSet s = enumerate_node(ast, n.child0, view, usage);
      for (auto& bit : s) bit = bit ? 0 : 1;
      return s;
    }
  }
  raise("ground enumerate: unreachable node kind");
}

std::vector<EntityId> to_ids(const BoolSet& s) {
  std::vector<EntityId> ids;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i]) ids.push_back(static_cast<EntityId>(i));
  }
  return ids;
}

}  // namespace

std::vector<EntityId> ground_enumerate(const QueryAST& ast,
                                       const GraphView& view) {
  ast.validate();
  return ground_enumerate_node(ast, ast.root, view);
}

std::vector<EntityId> ground_enumerate_node(const QueryAST& ast, NodeId node,
                                            const GraphView& view) {
  check_guard(view, "ground_enumerate");
  return to_ids(enumerate_node(ast, node, view, nullptr));
}

EdgeUsageRecord collect_traversed_edges(const QueryAST& ast,
                                        const GraphView& view) {
  check_guard(view, "collect_traversed_edges");
  ast.validate();
  EdgeUsageRecord usage;
  enumerate_node(ast, ast.root, view, &usage);
  for (auto& [node, edges] : usage.edges_by_node) {
    std::sort(edges.begin(), edges.end());
  }
  return usage;
}

}  // namespace folq
