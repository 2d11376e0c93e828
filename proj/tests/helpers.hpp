#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "folq/bench.hpp"
#include "folq/fuzzy.hpp"
#include "folq/kg.hpp"
#include "folq/query.hpp"
#include "folq/rng.hpp"
#include "folq/symbolic.hpp"
#include "folq/vm.hpp"

namespace folq::test {

// Hand-checkable academic toy graph. The three Turing laureates work in
// deep learning; the intersection query projected through University gives
// exactly their three universities.
inline std::string academic_triples() {
  return
      "Hinton\tWin\tTuringAward\n"
      "Bengio\tWin\tTuringAward\n"
      "LeCun\tWin\tTuringAward\n"
      "Einstein\tWin\tNobelPrize\n"
      "Hinton\tField\tDeepLearning\n"
      "Bengio\tField\tDeepLearning\n"
      "LeCun\tField\tDeepLearning\n"
      "Einstein\tField\tPhysics\n"
      "Hinton\tUniversity\tUofT\n"
      "Bengio\tUniversity\tUdeM\n"
      "LeCun\tUniversity\tNYU\n"
      "Einstein\tUniversity\tPrinceton\n";
}

inline std::string academic_query() {
  return "(P University fwd (AND (P Win inv (E TuringAward)) "
         "(P Field inv (E DeepLearning))))";
}

/// Random triple text over e0..e{V-1} and r0..r{R-1}.
inline std::string random_triple_text(Rng& rng, int num_entities,
                                      int num_relations, int num_triples) {
  std::set<std::array<int, 3>> seen;
  std::string text;
  int made = 0;
  for (int attempt = 0; attempt < num_triples * 20 && made < num_triples;
       ++attempt) {
    const int h = static_cast<int>(rng.uniform_int(num_entities));
    const int r = static_cast<int>(rng.uniform_int(num_relations));
    const int t = static_cast<int>(rng.uniform_int(num_entities));
    if (!seen.insert({h, r, t}).second) continue;
    text += "e" + std::to_string(h) + "\tr" + std::to_string(r) + "\te" +
            std::to_string(t) + "\n";
    ++made;
  }
  return text;
}

inline KnowledgeGraph random_graph(Rng& rng, int num_entities,
                                   int num_relations, int num_triples) {
  std::string text;
  do {
    text = random_triple_text(rng, num_entities, num_relations, num_triples);
  } while (text.empty());
  return load_triples(text);
}

struct SplitTexts {
  std::string train, valid, test;
};

/// Nested splits: `holdout` of the lines go half to valid-only, half to
/// test-only.
inline SplitTexts split_texts_from_lines(std::vector<std::string> lines,
                                         double holdout, Rng& rng) {
  rng.shuffle(lines);
  const size_t total = lines.size();
  const size_t held = static_cast<size_t>(std::floor(total * holdout));
  const size_t train_count = total - held;
  const size_t valid_count = train_count + held / 2;
  SplitTexts out;
  for (size_t i = 0; i < total; ++i) {
    const std::string line = lines[i] + "\n";
    if (i < train_count) out.train += line;
    if (i < valid_count) out.valid += line;
    out.test += line;
  }
  return out;
}

inline std::vector<std::string> text_to_lines(const std::string& text) {
  std::vector<std::string> lines;
  size_t pos = 0;
  while (pos < text.size()) {
    const size_t eol = text.find('\n', pos);
    lines.push_back(text.substr(pos, eol - pos));
    pos = eol + 1;
  }
  return lines;
}

inline SplitTexts random_split_texts(Rng& rng, int num_entities,
                                     int num_relations, int num_triples,
                                     double holdout) {
  const std::string text =
      random_triple_text(rng, num_entities, num_relations, num_triples);
  return split_texts_from_lines(text_to_lines(text), holdout, rng);
}

/// Random anchored tree with depth at most max_depth; never NOT at the root.
inline NodeId random_ast_node(QueryAST& ast, Rng& rng, int num_entities,
                              int num_edge_rels, int depth, int max_depth,
                              bool allow_not) {
  const auto anchor = [&]() {
    return ast.add_anchor(
        static_cast<EntityId>(rng.uniform_int(num_entities)));
  };
  if (depth >= max_depth) return anchor();
  const int kinds = allow_not ? 5 : 4;
  switch (rng.uniform_int(kinds)) {
    case 0:
      return anchor();
    case 1: {
      const NodeId child = random_ast_node(ast, rng, num_entities,
                                           num_edge_rels, depth + 1,
                                           max_depth, true);
      return ast.add_projection(
          static_cast<RelationId>(rng.uniform_int(num_edge_rels)), child);
    }
    case 2:
    case 3: {
      const NodeId left = random_ast_node(ast, rng, num_entities,
                                          num_edge_rels, depth + 1, max_depth,
                                          true);
      const NodeId right = random_ast_node(ast, rng, num_entities,
                                           num_edge_rels, depth + 1,
                                           max_depth, true);
      return rng.bernoulli(0.5) ? ast.add_and(left, right)
                                : ast.add_or(left, right);
    }
    default: {
      const NodeId child = random_ast_node(ast, rng, num_entities,
                                           num_edge_rels, depth + 1,
                                           max_depth, true);
      return ast.add_not(child);
    }
  }
}

inline QueryAST random_ast(Rng& rng, int num_entities, int num_edge_rels,
                           int max_depth) {
  QueryAST ast;
  ast.root = random_ast_node(ast, rng, num_entities, num_edge_rels, 0,
                             max_depth, /*allow_not=*/false);
  ast.validate();
  return ast;
}

/// Instantiate a template with uniformly random anchors/relations.
inline QueryAST random_template_instance(const QueryTypeTemplate& tmpl,
                                         Rng& rng, int num_entities,
                                         int num_edge_rels) {
  std::vector<EntityId> anchors(static_cast<size_t>(tmpl.num_anchors));
  std::vector<RelationId> relations(static_cast<size_t>(tmpl.num_relations));
  for (auto& a : anchors) {
    a = static_cast<EntityId>(rng.uniform_int(num_entities));
  }
  for (auto& r : relations) {
    r = static_cast<RelationId>(rng.uniform_int(num_edge_rels));
  }
  return instantiate_template(tmpl, anchors, relations);
}

/// Direct recursive evaluation of an AST; the independent control path the
/// postfix VM is checked against.
inline FuzzySet recursive_eval(const QueryAST& ast, NodeId id,
                               Projector& projector, const GraphView& view) {
  const QueryNode& n = ast.node(id);
  switch (n.kind) {
    case NodeKind::kAnchor:
      return singleton(n.entity, view.num_entities());
    case NodeKind::kProjection: {
      const FuzzySet input = recursive_eval(ast, n.child0, projector, view);
      const Projector::Request request{&input, n.relation, &view};
      FuzzySet out;
      projector.project({&request, 1}, {&out, 1});
      return out;
    }
    case NodeKind::kAnd:
      return conj(recursive_eval(ast, n.child0, projector, view),
                  recursive_eval(ast, n.child1, projector, view));
    case NodeKind::kOr:
      return disj(recursive_eval(ast, n.child0, projector, view),
                  recursive_eval(ast, n.child1, projector, view));
    case NodeKind::kNot:
      return neg(recursive_eval(ast, n.child0, projector, view));
  }
  raise("recursive_eval: unreachable");
}

inline FuzzySet recursive_eval(const QueryAST& ast, Projector& projector,
                               const GraphView& view) {
  return recursive_eval(ast, ast.root, projector, view);
}

inline FuzzySet random_fuzzy(Rng& rng, size_t size) {
  FuzzySet s(size);
  for (size_t i = 0; i < size; ++i) s[i] = rng.uniform();
  return s;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

/// Central finite difference of f() with respect to *slot.
template <typename F>
double central_diff(F&& f, double* slot, double step = 1e-5) {
  const double orig = *slot;
  *slot = orig + step;
  const double fp = f();
  *slot = orig - step;
  const double fm = f();
  *slot = orig;
  return (fp - fm) / (2.0 * step);
}

/// Fresh temp directory under the system temp root.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    auto base = std::filesystem::temp_directory_path();
    for (int i = 0;; ++i) {
      auto candidate = base / ("folq_" + tag + "_" + std::to_string(i));
      if (std::filesystem::create_directories(candidate)) {
        path_ = candidate;
        break;
      }
    }
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& child = "") const {
    return child.empty() ? path_.string() : (path_ / child).string();
  }

 private:
  std::filesystem::path path_;
};

}  // namespace folq::test
