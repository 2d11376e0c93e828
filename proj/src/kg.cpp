#include "folq/kg.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

namespace folq {

EntityId Vocabulary::add_entity(std::string_view name) {
  auto it = entity_ids_.find(std::string(name));
  if (it != entity_ids_.end()) return it->second;
  const EntityId id = static_cast<EntityId>(entity_names_.size());
  entity_names_.emplace_back(name);
  entity_ids_.emplace(entity_names_.back(), id);
  return id;
}

RelationId Vocabulary::add_relation(std::string_view name) {
  auto it = relation_ids_.find(std::string(name));
  if (it != relation_ids_.end()) return it->second;
  const RelationId id = static_cast<RelationId>(relation_names_.size());
  relation_names_.emplace_back(name);
  relation_ids_.emplace(relation_names_.back(), id);
  return id;
}

std::optional<EntityId> Vocabulary::entity(std::string_view name) const {
  auto it = entity_ids_.find(std::string(name));
  if (it == entity_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<RelationId> Vocabulary::relation(std::string_view name) const {
  auto it = relation_ids_.find(std::string(name));
  if (it == relation_ids_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::entity_name(EntityId id) const {
  if (id < 0 || static_cast<size_t>(id) >= entity_names_.size()) {
    raise("vocabulary: entity id ", id, " out of range");
  }
  return entity_names_[static_cast<size_t>(id)];
}

const std::string& Vocabulary::relation_name(RelationId id) const {
  if (id < 0 || static_cast<size_t>(id) >= relation_names_.size()) {
    raise("vocabulary: relation id ", id, " out of range");
  }
  return relation_names_[static_cast<size_t>(id)];
}

std::string Vocabulary::edge_relation_name(RelationId edge_rel) const {
  const auto n = static_cast<RelationId>(num_relations());
  if (edge_rel < n) return relation_name(edge_rel);
  return relation_name(edge_rel - n) + "^-1";
}

KnowledgeGraph::KnowledgeGraph(std::shared_ptr<const Vocabulary> vocab,
                               std::vector<Triple> triples)
    : vocab_(std::move(vocab)) {
  const auto num_rel = static_cast<RelationId>(vocab_->num_relations());
  const auto num_ent = static_cast<EntityId>(vocab_->num_entities());

  std::sort(triples.begin(), triples.end());
  triples.erase(std::unique(triples.begin(), triples.end()), triples.end());

  edges_.reserve(triples.size() * 2);
  for (const auto& [h, r, t] : triples) {
    if (h < 0 || h >= num_ent || t < 0 || t >= num_ent || r < 0 ||
        r >= num_rel) {
      raise("knowledge graph: triple has out-of-range ids (", h, ", ", r,
            ", ", t, ")");
    }
    edges_.push_back({h, r, t});
    edges_.push_back({t, static_cast<RelationId>(r + num_rel), h});
  }
  std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
    if (a.tail != b.tail) return a.tail < b.tail;
    if (a.rel != b.rel) return a.rel < b.rel;
    return a.head < b.head;
  });

  tail_offsets_.assign(static_cast<size_t>(num_ent) + 1, 0);
  for (const Edge& e : edges_) {
    ++tail_offsets_[static_cast<size_t>(e.tail) + 1];
  }
  for (size_t i = 1; i < tail_offsets_.size(); ++i) {
    tail_offsets_[i] += tail_offsets_[i - 1];
  }

  inverse_edge_.resize(edges_.size());
  for (size_t i = 0; i < edges_.size(); ++i) {
    const Edge& e = edges_[i];
    const Edge twin{e.tail, inverse_relation(e.rel), e.head};
    const auto [first, last] = in_range(twin.tail, twin.rel);
    EdgeId found = -1;
    for (EdgeId j = first; j < last; ++j) {
      if (edges_[static_cast<size_t>(j)].head == twin.head) {
        found = j;
        break;
      }
    }
    if (found < 0) raise("knowledge graph: inverse twin missing for edge ", i);
    inverse_edge_[i] = found;
  }
}

const Edge& KnowledgeGraph::edge(EdgeId id) const {
  return edges_[checked(id)];
}

size_t KnowledgeGraph::checked(EdgeId id) const {
  if (id < 0 || static_cast<size_t>(id) >= edges_.size()) {
    raise("knowledge graph: edge id ", id, " out of range");
  }
  return static_cast<size_t>(id);
}

RelationId KnowledgeGraph::inverse_relation(RelationId edge_rel) const {
  const auto n = static_cast<RelationId>(num_relations());
  if (edge_rel < 0 || edge_rel >= 2 * n) {
    raise("knowledge graph: edge-relation id ", edge_rel, " out of range");
  }
  return edge_rel < n ? edge_rel + n : edge_rel - n;
}

std::pair<EdgeId, EdgeId> KnowledgeGraph::in_range(EntityId tail) const {
  if (tail < 0 || static_cast<size_t>(tail) >= num_entities()) {
    raise("knowledge graph: entity id ", tail, " out of range");
  }
  return {tail_offsets_[static_cast<size_t>(tail)],
          tail_offsets_[static_cast<size_t>(tail) + 1]};
}

std::pair<EdgeId, EdgeId> KnowledgeGraph::in_range(EntityId tail,
                                                   RelationId rel) const {
  if (rel < 0 || static_cast<size_t>(rel) >= num_edge_relations()) {
    raise("knowledge graph: edge-relation id ", rel, " out of range");
  }
  const auto [first, last] = in_range(tail);
  const Edge* base = edges_.data();
  const Edge* lo = std::lower_bound(
      base + first, base + last, rel,
      [](const Edge& e, RelationId r) { return e.rel < r; });
  const Edge* hi = std::upper_bound(
      base + first, base + last, rel,
      [](RelationId r, const Edge& e) { return r < e.rel; });
  return {lo - base, hi - base};
}

bool KnowledgeGraph::has_edge(EntityId head, RelationId rel,
                              EntityId tail) const {
  const auto [first, last] = in_range(tail, rel);
  for (EdgeId id = first; id < last; ++id) {
    if (edges_[static_cast<size_t>(id)].head == head) return true;
  }
  return false;
}

std::vector<std::string> KnowledgeGraph::to_triple_lines() const {
  std::vector<std::string> lines;
  lines.reserve(num_triples());
  const auto num_rel = static_cast<RelationId>(num_relations());
  for (const Edge& e : edges_) {
    if (e.rel >= num_rel) continue;
    lines.push_back(concat(vocab_->entity_name(e.head), '\t',
                           vocab_->relation_name(e.rel), '\t',
                           vocab_->entity_name(e.tail)));
  }
  std::sort(lines.begin(), lines.end());
  return lines;
}

GraphView::GraphView(const KnowledgeGraph& graph) : graph_(&graph) {}

GraphView::GraphView(const KnowledgeGraph& graph,
                     std::span<const EdgeId> masked)
    : graph_(&graph) {
  if (masked.empty()) return;
  auto mask = std::make_shared<std::vector<uint8_t>>(graph.num_edges(), 0);
  for (EdgeId id : masked) {
    if (id < 0 || static_cast<size_t>(id) >= graph.num_edges()) {
      raise("graph view: masked edge id ", id, " out of range");
    }
    auto& flag = (*mask)[static_cast<size_t>(id)];
    if (!flag) {
      flag = 1;
      ++masked_count_;
    }
  }
  mask_ = std::move(mask);
}

std::vector<std::pair<EntityId, EdgeId>> GraphView::incoming(
    EntityId tail, RelationId rel) const {
  const auto [first, last] = graph_->in_range(tail, rel);
  std::vector<std::pair<EntityId, EdgeId>> out;
  out.reserve(static_cast<size_t>(last - first));
  for (EdgeId id = first; id < last; ++id) {
    if (is_masked(id)) continue;
    out.emplace_back(graph_->edge(id).head, id);
  }
  return out;
}

std::vector<std::array<std::string, 3>> parse_triple_lines(
    std::string_view text, const std::string& source_name) {
  std::vector<std::array<std::string, 3>> triples;
  std::set<std::array<std::string, 3>> seen;
  size_t line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    const size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(
        pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;

    std::array<std::string, 3> fields;
    size_t field = 0;
    size_t start = 0;
    bool bad = false;
    for (size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == '\t') {
        if (field >= 3) {
          bad = true;
          break;
        }
        fields[field++] = std::string(line.substr(start, i - start));
        start = i + 1;
      }
    }
    if (bad || field != 3 || fields[0].empty() || fields[1].empty() ||
        fields[2].empty()) {
      raise("parse error: ", source_name, " line ", line_no,
            ": expected 3 tab-separated fields");
    }
    if (seen.insert(fields).second) triples.push_back(std::move(fields));
  }
  return triples;
}

KnowledgeGraph load_triples(std::string_view text) {
  auto raw = parse_triple_lines(text);
  if (raw.empty()) raise("load_triples: no triplets in input");
  auto vocab = std::make_shared<Vocabulary>();
  std::vector<Triple> triples;
  triples.reserve(raw.size());
  for (const auto& [h, r, t] : raw) {
    const EntityId hid = vocab->add_entity(h);
    const RelationId rid = vocab->add_relation(r);
    const EntityId tid = vocab->add_entity(t);
    triples.push_back({hid, rid, tid});
  }
  return KnowledgeGraph(std::move(vocab), std::move(triples));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise("cannot open file: ", path);
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  return content;
}

void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise("cannot write file: ", path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) raise("write failed: ", path);
}

KnowledgeGraph load_triples_file(const std::string& path) {
  try {
    return load_triples(read_file(path));
  } catch (const Error& e) {
    raise(path, ": ", e.what());
  }
}

const KnowledgeGraph& SplitSet::by_name(std::string_view split) const {
  if (split == "train") return *train;
  if (split == "valid") return *valid;
  if (split == "test") return *test;
  raise("unknown split name '", split, "' (expected train/valid/test)");
}

SplitSet load_splits(const std::string& train_text,
                     const std::string& valid_text,
                     const std::string& test_text) {
  const auto train_raw = parse_triple_lines(train_text, "train");
  const auto valid_raw = parse_triple_lines(valid_text, "valid");
  const auto test_raw = parse_triple_lines(test_text, "test");
  if (train_raw.empty()) raise("load_splits: train split has no triplets");

  auto check_subset = [](const auto& small, const auto& big,
                         const char* small_name, const char* big_name) {
    std::set<std::array<std::string, 3>> big_set(big.begin(), big.end());
    for (const auto& t : small) {
      if (!big_set.count(t)) {
        raise("load_splits: subset violation: triplet '", t[0], "\t", t[1],
              "\t", t[2], "' in ", small_name, " missing from ", big_name);
      }
    }
  };
  check_subset(train_raw, valid_raw, "train", "valid");
  check_subset(valid_raw, test_raw, "valid", "test");

  auto vocab = std::make_shared<Vocabulary>();
  auto resolve = [&vocab](const auto& raw) {
    std::vector<Triple> triples;
    triples.reserve(raw.size());
    for (const auto& [h, r, t] : raw) {
      triples.push_back(
          {vocab->add_entity(h), vocab->add_relation(r), vocab->add_entity(t)});
    }
    return triples;
  };
  auto train_triples = resolve(train_raw);
  auto valid_triples = resolve(valid_raw);
  auto test_triples = resolve(test_raw);

  SplitSet splits;
  splits.vocab = vocab;
  splits.train =
      std::make_shared<KnowledgeGraph>(vocab, std::move(train_triples));
  splits.valid =
      std::make_shared<KnowledgeGraph>(vocab, std::move(valid_triples));
  splits.test =
      std::make_shared<KnowledgeGraph>(vocab, std::move(test_triples));
  return splits;
}

SplitSet load_splits_manifest(const std::string& manifest_path) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    raise("manifest ", manifest_path, ": ", e.what());
  }
  const auto dir = std::filesystem::path(manifest_path).parent_path();
  auto split_text = [&](const char* name) {
    if (!manifest.contains(name)) {
      raise("manifest ", manifest_path, ": missing split '", name, "'");
    }
    std::filesystem::path p(manifest.at(name).get<std::string>());
    if (p.is_relative()) p = dir / p;
    return read_file(p.string());
  };
  return load_splits(split_text("train"), split_text("valid"),
                     split_text("test"));
}

}  // namespace folq
