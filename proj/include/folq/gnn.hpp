#pragma once

#include <atomic>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "folq/fuzzy.hpp"
#include "folq/kg.hpp"
#include "folq/vm.hpp"

namespace folq {

struct GnnConfig {
  int num_layers = 4;
  int hidden_dim = 32;
  int mlp_layers = 2;
  int mlp_hidden = 64;

  bool operator==(const GnnConfig&) const = default;
  void validate() const;
};

/// Flat-parameter layout. Declared array order (also the checkpoint order):
///   query embeddings  [2|R| x d]      one per edge-relation
///   message weights   [T x 2|R| x d x d]
///   message biases    [T x 2|R| x d]
///   aggregate proj    [T x d x 4d]    combines mean|max|min|std
///   aggregate bias    [T x d]
///   output MLP        per layer: W [out x in], b [out]
struct GnnShapes {
  GnnShapes(const GnnConfig& config, int num_relations);

  int num_layers;
  int dim;
  int mlp_layers;
  int mlp_hidden;
  int num_relations;
  int num_edge_rels;

  size_t query_off;
  size_t msg_w_off;
  size_t msg_b_off;
  size_t pna_w_off;
  size_t pna_b_off;
  std::vector<size_t> mlp_w_off;
  std::vector<size_t> mlp_b_off;
  std::vector<int> mlp_in;
  std::vector<int> mlp_out;
  size_t total;

  size_t query_index(RelationId rel) const {
    return query_off + static_cast<size_t>(rel) * dim;
  }
  size_t msg_w_index(int layer, RelationId rel) const {
    return msg_w_off +
           (static_cast<size_t>(layer) * num_edge_rels + rel) * dim * dim;
  }
  size_t msg_b_index(int layer, RelationId rel) const {
    return msg_b_off +
           (static_cast<size_t>(layer) * num_edge_rels + rel) * dim;
  }
  size_t pna_w_index(int layer) const {
    return pna_w_off + static_cast<size_t>(layer) * dim * 4 * dim;
  }
  size_t pna_b_index(int layer) const {
    return pna_b_off + static_cast<size_t>(layer) * dim;
  }
};

struct GnnParameters {
  GnnConfig config;
  int num_relations = 0;
  std::vector<double> data;

  GnnShapes shapes() const { return GnnShapes(config, num_relations); }
};

/// Deterministic initialization: weight matrices and query embeddings drawn
/// uniform(-1/sqrt(d), 1/sqrt(d)), biases zero.
GnnParameters init_params(const GnnConfig& config, int num_relations,
                          uint64_t seed);

/// Everything a backward pass needs to replay one projection exactly.
struct GnnTape : ProjectionTape {
  FuzzySet x;
  RelationId rel = -1;
  GraphView view;
  size_t num_nodes = 0;
  std::vector<size_t> slot_offsets;          // V+1; slot 0 = boundary self
  std::vector<std::vector<double>> h;        // T+1 layers, each V*d
  std::vector<std::vector<double>> msgs;     // T layers, slots*d
  std::vector<std::vector<double>> stats;    // T layers, V*4d
  std::vector<std::vector<double>> relvec;   // T layers, 2|R|*d
  std::vector<std::vector<double>> mlp_act;  // mlp_layers-1, V*mlp_hidden
  std::vector<double> out;                   // V probabilities
};

/// One relation projection: boundary h0 = x_v * q, T rounds of relation
/// messages with mean/max/min/std aggregation, then sigmoid(MLP(h_T)).
/// `edge_touches`, when given, is incremented once per computed message.
FuzzySet gnn_forward(const FuzzySet& x, RelationId rel, const GraphView& view,
                     const GnnParameters& params, GnnTape* tape = nullptr,
                     uint64_t* edge_touches = nullptr);

/// Exact reverse-mode for gnn_forward. Adds into grad_params (layout of
/// GnnShapes) and, if non-empty, grad_x (size V).
void gnn_backward(const GnnTape& tape, const GnnParameters& params,
                  std::span<const double> grad_out,
                  std::span<double> grad_params, std::span<double> grad_x);

class NeuralProjector : public Projector {
 public:
  explicit NeuralProjector(const GnnParameters& params, int threads = 1)
      : params_(&params), threads_(threads) {}

  void project(std::span<const Request> requests,
               std::span<FuzzySet> out) override;
  void project_captured(
      std::span<const Request> requests, std::span<FuzzySet> out,
      std::span<std::shared_ptr<ProjectionTape>> tapes) override;

  uint64_t edge_touches() const { return edge_touches_.load(); }
  void reset_edge_touches() { edge_touches_.store(0); }
  uint64_t projector_calls() const { return calls_.load(); }

 private:
  const GnnParameters* params_;
  int threads_;
  std::atomic<uint64_t> edge_touches_{0};
  std::atomic<uint64_t> calls_{0};
};

void save_checkpoint(const GnnParameters& params, const std::string& path);
GnnParameters load_checkpoint(const std::string& path);

}  // namespace folq
