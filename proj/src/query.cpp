#include "folq/query.hpp"

#include <algorithm>

namespace folq {

NodeId QueryAST::add_anchor(EntityId entity) {
  nodes.push_back({NodeKind::kAnchor, entity, -1, -1, -1});
  root = static_cast<NodeId>(nodes.size() - 1);
  return root;
}

NodeId QueryAST::add_projection(RelationId relation, NodeId child) {
  nodes.push_back({NodeKind::kProjection, -1, relation, child, -1});
  root = static_cast<NodeId>(nodes.size() - 1);
  return root;
}

NodeId QueryAST::add_and(NodeId left, NodeId right) {
  nodes.push_back({NodeKind::kAnd, -1, -1, left, right});
  root = static_cast<NodeId>(nodes.size() - 1);
  return root;
}

NodeId QueryAST::add_or(NodeId left, NodeId right) {
  nodes.push_back({NodeKind::kOr, -1, -1, left, right});
  root = static_cast<NodeId>(nodes.size() - 1);
  return root;
}

NodeId QueryAST::add_not(NodeId child) {
  nodes.push_back({NodeKind::kNot, -1, -1, child, -1});
  root = static_cast<NodeId>(nodes.size() - 1);
  return root;
}

const QueryNode& QueryAST::node(NodeId id) const {
  if (id < 0 || static_cast<size_t>(id) >= nodes.size()) {
    raise("query AST: node id ", id, " out of range");
  }
  return nodes[static_cast<size_t>(id)];
}

namespace {

void validate_subtree(const QueryAST& ast, NodeId id,
                      std::vector<uint8_t>& visited) {
  const QueryNode& n = ast.node(id);
  if (visited[static_cast<size_t>(id)]) {
    raise("query AST: node ", id, " used more than once (not a tree)");
  }
  visited[static_cast<size_t>(id)] = 1;
  switch (n.kind) {
    case NodeKind::kAnchor:
      if (n.entity < 0) raise("query AST: anchor without entity");
      break;
    case NodeKind::kProjection:
      if (n.relation < 0) raise("query AST: projection without relation");
      validate_subtree(ast, n.child0, visited);
      break;
    case NodeKind::kAnd:
    case NodeKind::kOr:
      validate_subtree(ast, n.child0, visited);
      validate_subtree(ast, n.child1, visited);
      break;
    case NodeKind::kNot:
      validate_subtree(ast, n.child0, visited);
      break;
  }
}

}  // namespace

void QueryAST::validate() const {
  if (root < 0) raise("query AST: empty");
  if (node(root).kind == NodeKind::kNot) {
    raise("grammar error: NOT cannot be the query root");
  }
  std::vector<uint8_t> visited(nodes.size(), 0);
  validate_subtree(*this, root, visited);
}

namespace {

bool equivalent_node(const QueryAST& a, NodeId ia, const QueryAST& b,
                     NodeId ib) {
  const QueryNode& na = a.node(ia);
  const QueryNode& nb = b.node(ib);
  if (na.kind != nb.kind) return false;
  switch (na.kind) {
    case NodeKind::kAnchor:
      return na.entity == nb.entity;
    case NodeKind::kProjection:
      return na.relation == nb.relation &&
             equivalent_node(a, na.child0, b, nb.child0);
    case NodeKind::kAnd:
    case NodeKind::kOr:
      return equivalent_node(a, na.child0, b, nb.child0) &&
             equivalent_node(a, na.child1, b, nb.child1);
    case NodeKind::kNot:
      return equivalent_node(a, na.child0, b, nb.child0);
  }
  return false;
}

}  // namespace

bool equivalent(const QueryAST& a, const QueryAST& b) {
  if (a.root < 0 || b.root < 0) return a.root == b.root;
  return equivalent_node(a, a.root, b, b.root);
}

namespace {

struct Token {
  enum Kind { kOpen, kClose, kAtom, kEnd } kind;
  std::string_view text;
  size_t pos;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    while (pos_ < text_.size() && is_space(text_[pos_])) ++pos_;
    if (pos_ >= text_.size()) return {Token::kEnd, {}, pos_};
    const size_t start = pos_;
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      return {Token::kOpen, text_.substr(start, 1), start};
    }
    if (c == ')') {
      ++pos_;
      return {Token::kClose, text_.substr(start, 1), start};
    }
    while (pos_ < text_.size() && !is_space(text_[pos_]) &&
           text_[pos_] != '(' && text_[pos_] != ')') {
      ++pos_;
    }
    return {Token::kAtom, text_.substr(start, pos_ - start), start};
  }

 private:
  static bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r';
  }
  std::string_view text_;
  size_t pos_ = 0;
};

class Parser {
 public:
  Parser(std::string_view text, const Vocabulary& vocab)
      : lexer_(text), vocab_(vocab) {
    advance();
  }

  QueryAST parse() {
    QueryAST ast;
    const NodeId root = parse_expr(ast);
    if (current_.kind != Token::kEnd) {
      raise("syntax error at position ", current_.pos,
            ": unexpected trailing input");
    }
    ast.root = root;
    if (ast.node(root).kind == NodeKind::kNot) {
      raise("grammar error: NOT cannot be the query root");
    }
    ast.validate();
    return ast;
  }

 private:
  void advance() { current_ = lexer_.next(); }

  Token expect(Token::Kind kind, const char* what) {
    if (current_.kind != kind) {
      raise("syntax error at position ", current_.pos, ": expected ", what);
    }
    Token t = current_;
    advance();
    return t;
  }

  NodeId parse_expr(QueryAST& ast) {
    expect(Token::kOpen, "'('");
    const Token head = expect(Token::kAtom, "operator (E/P/AND/OR/NOT)");
    NodeId result;
    if (head.text == "E") {
      const Token name = expect(Token::kAtom, "entity name");
      const auto id = vocab_.entity(name.text);
      if (!id) raise("resolution error: unknown entity '", name.text, "'");
      result = ast.add_anchor(*id);
    } else if (head.text == "P") {
      const Token name = expect(Token::kAtom, "relation name");
      const auto rel = vocab_.relation(name.text);
      if (!rel) raise("resolution error: unknown relation '", name.text, "'");
      const Token dir = expect(Token::kAtom, "direction (fwd/inv)");
      RelationId edge_rel = *rel;
      if (dir.text == "inv") {
        edge_rel += static_cast<RelationId>(vocab_.num_relations());
      } else if (dir.text != "fwd") {
        raise("syntax error at position ", dir.pos,
              ": expected direction 'fwd' or 'inv', got '", dir.text, "'");
      }
      const NodeId child = parse_expr(ast);
      result = ast.add_projection(edge_rel, child);
    } else if (head.text == "AND" || head.text == "OR") {
      const NodeId left = parse_expr(ast);
      const NodeId right = parse_expr(ast);
      result = head.text == "AND" ? ast.add_and(left, right)
                                  : ast.add_or(left, right);
    } else if (head.text == "NOT") {
      const NodeId child = parse_expr(ast);
      result = ast.add_not(child);
    } else {
      raise("syntax error at position ", head.pos, ": unknown operator '",
            head.text, "'");
    }
    expect(Token::kClose, "')'");
    return result;
  }

  Lexer lexer_;
  const Vocabulary& vocab_;
  Token current_;
};

void render_node(const QueryAST& ast, NodeId id, const Vocabulary& vocab,
                 std::string& out) {
  const QueryNode& n = ast.node(id);
  switch (n.kind) {
    case NodeKind::kAnchor:
      out += "(E ";
      out += vocab.entity_name(n.entity);
      out += ')';
      break;
    case NodeKind::kProjection: {
      const auto num_rel = static_cast<RelationId>(vocab.num_relations());
      out += "(P ";
      if (n.relation < num_rel) {
        out += vocab.relation_name(n.relation);
        out += " fwd ";
      } else {
        out += vocab.relation_name(n.relation - num_rel);
        out += " inv ";
      }
      render_node(ast, n.child0, vocab, out);
      out += ')';
      break;
    }
    case NodeKind::kAnd:
    case NodeKind::kOr:
      out += n.kind == NodeKind::kAnd ? "(AND " : "(OR ";
      render_node(ast, n.child0, vocab, out);
      out += ' ';
      render_node(ast, n.child1, vocab, out);
      out += ')';
      break;
    case NodeKind::kNot:
      out += "(NOT ";
      render_node(ast, n.child0, vocab, out);
      out += ')';
      break;
  }
}

}  // namespace

QueryAST parse_query(std::string_view text, const Vocabulary& vocab) {
  return Parser(text, vocab).parse();
}

std::string render_query(const QueryAST& ast, const Vocabulary& vocab) {
  return render_subquery(ast, ast.root, vocab);
}

std::string render_subquery(const QueryAST& ast, NodeId node,
                            const Vocabulary& vocab) {
  std::string out;
  render_node(ast, node, vocab, out);
  return out;
}

size_t PostfixProgram::num_projections() const {
  return static_cast<size_t>(
      std::count_if(code.begin(), code.end(), [](const Instruction& ins) {
        return ins.op == OpCode::kProject;
      }));
}

namespace {

void emit_postfix(const QueryAST& ast, NodeId id, PostfixProgram& program) {
  const QueryNode& n = ast.node(id);
  switch (n.kind) {
    case NodeKind::kAnchor:
      program.code.push_back({OpCode::kPushAnchor, n.entity, id});
      break;
    case NodeKind::kProjection:
      emit_postfix(ast, n.child0, program);
      program.code.push_back({OpCode::kProject, n.relation, id});
      break;
    case NodeKind::kAnd:
    case NodeKind::kOr:
      emit_postfix(ast, n.child0, program);
      emit_postfix(ast, n.child1, program);
      program.code.push_back(
          {n.kind == NodeKind::kAnd ? OpCode::kAnd : OpCode::kOr, -1, id});
      break;
    case NodeKind::kNot:
      emit_postfix(ast, n.child0, program);
      program.code.push_back({OpCode::kNot, -1, id});
      break;
  }
}

}  // namespace

PostfixProgram compile_postfix(const QueryAST& ast) {
  ast.validate();
  PostfixProgram program;
  program.code.reserve(ast.size());
  emit_postfix(ast, ast.root, program);

  int depth = 0;
  int max_depth = 0;
  for (const Instruction& ins : program.code) {
    switch (ins.op) {
      case OpCode::kPushAnchor:
        ++depth;
        break;
      case OpCode::kAnd:
      case OpCode::kOr:
        depth -= 1;  // pop 2, push 1
        break;
      case OpCode::kProject:
      case OpCode::kNot:
        break;  // pop 1, push 1
    }
    if (depth <= 0) raise("postfix compile: stack underflow");
    max_depth = std::max(max_depth, depth);
  }
  if (depth != 1) raise("postfix compile: program leaves ", depth, " values");
  program.max_stack_depth = max_depth;
  return program;
}

namespace {

// Placeholder slots: anchor entities and projection relations hold slot
// indices until instantiation.
std::vector<QueryTypeTemplate> build_templates() {
  std::vector<QueryTypeTemplate> out;
  auto add = [&out](std::string name, bool trainable, int anchors, int rels,
                    QueryAST skeleton) {
    out.push_back({std::move(name), trainable, anchors, rels,
                   std::move(skeleton)});
  };

  {  // 1p: (P r0 (E e0))
    QueryAST t;
    t.add_projection(0, t.add_anchor(0));
    add("1p", true, 1, 1, std::move(t));
  }
  {  // 2p
    QueryAST t;
    t.add_projection(1, t.add_projection(0, t.add_anchor(0)));
    add("2p", true, 1, 2, std::move(t));
  }
  {  // 3p
    QueryAST t;
    t.add_projection(
        2, t.add_projection(1, t.add_projection(0, t.add_anchor(0))));
    add("3p", true, 1, 3, std::move(t));
  }
  {  // 2i: (AND (P r0 (E e0)) (P r1 (E e1)))
    QueryAST t;
    const NodeId a = t.add_projection(0, t.add_anchor(0));
    const NodeId b = t.add_projection(1, t.add_anchor(1));
    t.add_and(a, b);
    add("2i", true, 2, 2, std::move(t));
  }
  {  // 3i: (AND (P r0 (E e0)) (AND (P r1 (E e1)) (P r2 (E e2))))
    QueryAST t;
    const NodeId a = t.add_projection(0, t.add_anchor(0));
    const NodeId b = t.add_projection(1, t.add_anchor(1));
    const NodeId c = t.add_projection(2, t.add_anchor(2));
    t.add_and(a, t.add_and(b, c));
    add("3i", true, 3, 3, std::move(t));
  }
  {  // pi: (AND (P r1 (P r0 (E e0))) (P r2 (E e1)))
    QueryAST t;
    const NodeId chain =
        t.add_projection(1, t.add_projection(0, t.add_anchor(0)));
    const NodeId b = t.add_projection(2, t.add_anchor(1));
    t.add_and(chain, b);
    add("pi", false, 2, 3, std::move(t));
  }
  {  // ip: (P r2 (AND (P r0 (E e0)) (P r1 (E e1))))
    QueryAST t;
    const NodeId a = t.add_projection(0, t.add_anchor(0));
    const NodeId b = t.add_projection(1, t.add_anchor(1));
    t.add_projection(2, t.add_and(a, b));
    add("ip", false, 2, 3, std::move(t));
  }
  {  // 2u: (OR (P r0 (E e0)) (P r1 (E e1)))
    QueryAST t;
    const NodeId a = t.add_projection(0, t.add_anchor(0));
    const NodeId b = t.add_projection(1, t.add_anchor(1));
    t.add_or(a, b);
    add("2u", false, 2, 2, std::move(t));
  }
  {  // up: (P r2 (OR (P r0 (E e0)) (P r1 (E e1))))
    QueryAST t;
    const NodeId a = t.add_projection(0, t.add_anchor(0));
    const NodeId b = t.add_projection(1, t.add_anchor(1));
    t.add_projection(2, t.add_or(a, b));
    add("up", false, 2, 3, std::move(t));
  }
  {  // 2in: (AND (P r0 (E e0)) (NOT (P r1 (E e1))))
    QueryAST t;
    const NodeId a = t.add_projection(0, t.add_anchor(0));
    const NodeId b = t.add_not(t.add_projection(1, t.add_anchor(1)));
    t.add_and(a, b);
    add("2in", true, 2, 2, std::move(t));
  }
  {  // 3in: (AND (P r0 (E e0)) (AND (P r1 (E e1)) (NOT (P r2 (E e2)))))
    QueryAST t;
    const NodeId a = t.add_projection(0, t.add_anchor(0));
    const NodeId b = t.add_projection(1, t.add_anchor(1));
    const NodeId c = t.add_not(t.add_projection(2, t.add_anchor(2)));
    t.add_and(a, t.add_and(b, c));
    add("3in", true, 3, 3, std::move(t));
  }
  {  // inp: (P r2 (AND (P r0 (E e0)) (NOT (P r1 (E e1)))))
    QueryAST t;
    const NodeId a = t.add_projection(0, t.add_anchor(0));
    const NodeId b = t.add_not(t.add_projection(1, t.add_anchor(1)));
    t.add_projection(2, t.add_and(a, b));
    add("inp", true, 2, 3, std::move(t));
  }
  {  // pin: (AND (P r1 (P r0 (E e0))) (NOT (P r2 (E e1))))
    QueryAST t;
    const NodeId chain =
        t.add_projection(1, t.add_projection(0, t.add_anchor(0)));
    const NodeId b = t.add_not(t.add_projection(2, t.add_anchor(1)));
    t.add_and(chain, b);
    add("pin", true, 2, 3, std::move(t));
  }
  {  // pni: (AND (NOT (P r1 (P r0 (E e0)))) (P r2 (E e1)))
    QueryAST t;
    const NodeId chain =
        t.add_not(t.add_projection(1, t.add_projection(0, t.add_anchor(0))));
    const NodeId b = t.add_projection(2, t.add_anchor(1));
    t.add_and(chain, b);
    add("pni", true, 2, 3, std::move(t));
  }
  return out;
}

}  // namespace

const std::vector<QueryTypeTemplate>& query_templates() {
  static const std::vector<QueryTypeTemplate> templates = build_templates();
  return templates;
}

const QueryTypeTemplate& template_by_name(std::string_view name) {
  for (const auto& t : query_templates()) {
    if (t.name == name) return t;
  }
  raise("unknown query type '", name, "'");
}

QueryAST instantiate_template(const QueryTypeTemplate& tmpl,
                              std::span<const EntityId> anchors,
                              std::span<const RelationId> relations) {
  if (anchors.size() != static_cast<size_t>(tmpl.num_anchors)) {
    raise("template ", tmpl.name, ": expected ", tmpl.num_anchors,
          " anchors, got ", anchors.size());
  }
  if (relations.size() != static_cast<size_t>(tmpl.num_relations)) {
    raise("template ", tmpl.name, ": expected ", tmpl.num_relations,
          " relations, got ", relations.size());
  }
  QueryAST ast = tmpl.skeleton;
  for (QueryNode& n : ast.nodes) {
    if (n.kind == NodeKind::kAnchor) {
      n.entity = anchors[static_cast<size_t>(n.entity)];
    } else if (n.kind == NodeKind::kProjection) {
      n.relation = relations[static_cast<size_t>(n.relation)];
    }
  }
  return ast;
}

}  // namespace folq
