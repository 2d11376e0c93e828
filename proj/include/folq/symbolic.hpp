#pragma once

#include <map>
#include <vector>

#include "folq/fuzzy.hpp"
#include "folq/kg.hpp"
#include "folq/query.hpp"
#include "folq/vm.hpp"

namespace folq {

/// Traversal-based relation projection: out[v] is the max input probability
/// over unmasked edges (u, rel, v). Exact relational image on {0,1} inputs.
FuzzySet traverse_project(const FuzzySet& x, RelationId rel,
                          const GraphView& view);

class SymbolicProjector : public Projector {
 public:
  void project(std::span<const Request> requests,
               std::span<FuzzySet> out) override;
  /// Capture is a no-op here: traversal has no parameters, so the tapes
  /// stay null and records built with it are forward-only.
  void project_captured(
      std::span<const Request> requests, std::span<FuzzySet> out,
      std::span<std::shared_ptr<ProjectionTape>> tapes) override;
};

/// Edges traversed per projection node of a query, symbolically grounded.
struct EdgeUsageRecord {
  std::map<NodeId, std::vector<EdgeId>> edges_by_node;

  size_t total_edges() const;
};

inline constexpr size_t kGroundEnumerateMaxEntities = 1000;

/// Exact answer set by recursive set semantics over the view (complement is
/// taken against the full entity set). Deliberately shares no evaluation
/// code with the VM so it can act as an oracle for it. Refuses graphs with
/// more than kGroundEnumerateMaxEntities entities.
std::vector<EntityId> ground_enumerate(const QueryAST& ast,
                                       const GraphView& view);

/// Same, for the sub-query rooted at an arbitrary node.
std::vector<EntityId> ground_enumerate_node(const QueryAST& ast, NodeId node,
                                            const GraphView& view);

/// For each projection node, the unmasked edges (u, rel, v) whose source u
/// lies in the node's exact input set.
EdgeUsageRecord collect_traversed_edges(const QueryAST& ast,
                                        const GraphView& view);

}  // namespace folq
