#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "folq/common.hpp"
#include "folq/kg.hpp"

namespace folq {

enum class NodeKind : uint8_t { kAnchor, kProjection, kAnd, kOr, kNot };

struct QueryNode {
  NodeKind kind;
  EntityId entity = -1;    // kAnchor
  RelationId relation = -1;  // kProjection (edge-relation id)
  NodeId child0 = -1;
  NodeId child1 = -1;
};

/// Anchored-tree query. Nodes live in an arena; node ids index it and are
/// the correlation keys for traces and edge-usage records.
struct QueryAST {
  std::vector<QueryNode> nodes;
  NodeId root = -1;

  NodeId add_anchor(EntityId entity);
  NodeId add_projection(RelationId relation, NodeId child);
  NodeId add_and(NodeId left, NodeId right);
  NodeId add_or(NodeId left, NodeId right);
  NodeId add_not(NodeId child);

  const QueryNode& node(NodeId id) const;
  size_t size() const { return nodes.size(); }

  /// Tree checks: single root, every leaf an anchor, no NOT at the root.
  void validate() const;
};

/// Structural tree equality, independent of arena layout.
bool equivalent(const QueryAST& a, const QueryAST& b);

/// Grammar:
///   query := (E <entity>) | (P <relation> <fwd|inv> query)
///          | (AND query query) | (OR query query) | (NOT query)
QueryAST parse_query(std::string_view text, const Vocabulary& vocab);

std::string render_query(const QueryAST& ast, const Vocabulary& vocab);
std::string render_subquery(const QueryAST& ast, NodeId node,
                            const Vocabulary& vocab);

enum class OpCode : uint8_t { kPushAnchor, kProject, kAnd, kOr, kNot };

struct Instruction {
  OpCode op;
  int32_t arg = -1;  // entity id for kPushAnchor, edge-relation for kProject
  NodeId node = -1;  // source AST node
};

struct PostfixProgram {
  std::vector<Instruction> code;
  int max_stack_depth = 0;

  size_t num_projections() const;
};

/// Left-to-right depth-first emission, children before operator.
PostfixProgram compile_postfix(const QueryAST& ast);

/// One of the 14 benchmark query shapes. The skeleton stores placeholder
/// slot indices in the entity/relation fields.
struct QueryTypeTemplate {
  std::string name;
  bool trainable;
  int num_anchors;
  int num_relations;
  QueryAST skeleton;
};

const std::vector<QueryTypeTemplate>& query_templates();
const QueryTypeTemplate& template_by_name(std::string_view name);

QueryAST instantiate_template(const QueryTypeTemplate& tmpl,
                              std::span<const EntityId> anchors,
                              std::span<const RelationId> relations);

}  // namespace folq
