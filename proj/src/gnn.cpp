#include "folq/gnn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "folq/rng.hpp"
#include "folq/threading.hpp"

namespace folq {

namespace {
// The std aggregate is sqrt(var + eps) - sqrt(eps): the eps inside the root
// keeps it differentiable at zero variance, the shift keeps it exactly zero
// there so an all-zero input stays symmetric across entities.
constexpr double kStdEpsilon = 1e-10;
const double kStdShift = std::sqrt(kStdEpsilon);
}

void GnnConfig::validate() const {
  if (num_layers < 1) raise("gnn config: num_layers must be >= 1");
  if (hidden_dim < 1) raise("gnn config: hidden_dim must be >= 1");
  if (mlp_layers < 1) raise("gnn config: mlp_layers must be >= 1");
  if (mlp_layers > 1 && mlp_hidden < 1) {
    raise("gnn config: mlp_hidden must be >= 1");
  }
}

GnnShapes::GnnShapes(const GnnConfig& config, int relations) {
  config.validate();
  if (relations < 1) raise("gnn shapes: need at least one relation");
  num_layers = config.num_layers;
  dim = config.hidden_dim;
  mlp_layers = config.mlp_layers;
  mlp_hidden = config.mlp_hidden;
  num_relations = relations;
  num_edge_rels = 2 * relations;

  const size_t d = static_cast<size_t>(dim);
  const size_t t = static_cast<size_t>(num_layers);
  const size_t r2 = static_cast<size_t>(num_edge_rels);

  size_t offset = 0;
  query_off = offset;
  offset += r2 * d;
  msg_w_off = offset;
  offset += t * r2 * d * d;
  msg_b_off = offset;
  offset += t * r2 * d;
  pna_w_off = offset;
  offset += t * d * 4 * d;
  pna_b_off = offset;
  offset += t * d;

  int in = dim;
  for (int l = 0; l < mlp_layers; ++l) {
    const int out = l + 1 == mlp_layers ? 1 : mlp_hidden;
    mlp_in.push_back(in);
    mlp_out.push_back(out);
    mlp_w_off.push_back(offset);
    offset += static_cast<size_t>(out) * in;
    mlp_b_off.push_back(offset);
    offset += static_cast<size_t>(out);
    in = out;
  }
  total = offset;
}

GnnParameters init_params(const GnnConfig& config, int num_relations,
                          uint64_t seed) {
  const GnnShapes shapes(config, num_relations);
  GnnParameters params;
  params.config = config;
  params.num_relations = num_relations;
  params.data.assign(shapes.total, 0.0);

  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(config.hidden_dim));
  auto fill = [&](size_t off, size_t count) {
    for (size_t i = 0; i < count; ++i) {
      params.data[off + i] = rng.uniform(-bound, bound);
    }
  };
  const size_t d = static_cast<size_t>(shapes.dim);
  const size_t r2 = static_cast<size_t>(shapes.num_edge_rels);
  const size_t t = static_cast<size_t>(shapes.num_layers);
  fill(shapes.query_off, r2 * d);
  fill(shapes.msg_w_off, t * r2 * d * d);
  fill(shapes.pna_w_off, t * d * 4 * d);
  for (int l = 0; l < shapes.mlp_layers; ++l) {
    fill(shapes.mlp_w_off[static_cast<size_t>(l)],
         static_cast<size_t>(shapes.mlp_out[static_cast<size_t>(l)]) *
             static_cast<size_t>(shapes.mlp_in[static_cast<size_t>(l)]));
  }
  return params;
}

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void check_finite(std::span<const double> values, const char* where) {
  for (double v : values) {
    if (!std::isfinite(v)) raise("gnn: non-finite value in ", where);
  }
}

struct ForwardScratch {
  std::vector<size_t> slot_offsets;
  std::vector<double> h_prev, h_cur, msgs, stats, relvec;
};

}  // namespace

FuzzySet gnn_forward(const FuzzySet& x, RelationId rel, const GraphView& view,
                     const GnnParameters& params, GnnTape* tape,
                     uint64_t* edge_touches) {
  const GnnShapes shapes = params.shapes();
  const KnowledgeGraph& graph = view.graph();
  const size_t num_nodes = graph.num_entities();
  const size_t d = static_cast<size_t>(shapes.dim);
  const int T = shapes.num_layers;

  if (x.size() != num_nodes) {
    raise("gnn: input fuzzy set size ", x.size(), " vs ", num_nodes,
          " entities");
  }
  if (rel < 0 || rel >= shapes.num_edge_rels) {
    raise("gnn: edge-relation id ", rel, " out of range [0, ",
          shapes.num_edge_rels, ")");
  }
  if (params.data.size() != shapes.total) {
    raise("gnn: parameter blob has ", params.data.size(), " values, expected ",
          shapes.total);
  }

  // Slot layout per node: slot 0 carries the node's own boundary value h0,
  // the rest the unmasked incoming edges in adjacency order.
  std::vector<size_t> slot_offsets(num_nodes + 1, 0);
  for (size_t v = 0; v < num_nodes; ++v) {
    size_t deg = 0;
    view.for_in_edges(static_cast<EntityId>(v),
                      [&deg](const Edge&, EdgeId) { ++deg; });
    slot_offsets[v + 1] = slot_offsets[v] + deg + 1;
  }
  const size_t total_slots = slot_offsets[num_nodes];

  const double* q = params.data.data() + shapes.query_index(rel);

  std::vector<double> h0(num_nodes * d);
  for (size_t v = 0; v < num_nodes; ++v) {
    const double xv = x[v];
    for (size_t k = 0; k < d; ++k) h0[v * d + k] = xv * q[k];
  }

  if (tape) {
    tape->x = x;
    tape->rel = rel;
    tape->view = view;
    tape->num_nodes = num_nodes;
    tape->slot_offsets = slot_offsets;
    tape->h.assign(static_cast<size_t>(T) + 1, {});
    tape->h[0] = h0;
    tape->msgs.assign(static_cast<size_t>(T), {});
    tape->stats.assign(static_cast<size_t>(T), {});
    tape->relvec.assign(static_cast<size_t>(T), {});
    tape->mlp_act.assign(static_cast<size_t>(shapes.mlp_layers) - 1, {});
  }

  std::vector<double> h_prev = h0;
  std::vector<double> h_cur(num_nodes * d);
  std::vector<double> msgs;
  std::vector<double> stats;
  std::vector<double> relvec(static_cast<size_t>(shapes.num_edge_rels) * d);
  uint64_t touches = 0;

  for (int t = 0; t < T; ++t) {
    // Per-relation message transform of the query embedding: W_r q + b_r.
    for (RelationId r = 0; r < shapes.num_edge_rels; ++r) {
      const double* w = params.data.data() + shapes.msg_w_index(t, r);
      const double* b = params.data.data() + shapes.msg_b_index(t, r);
      for (size_t i = 0; i < d; ++i) {
        double acc = b[i];
        const double* row = w + i * d;
        for (size_t j = 0; j < d; ++j) acc += row[j] * q[j];
        relvec[static_cast<size_t>(r) * d + i] = acc;
      }
    }

    msgs.assign(total_slots * d, 0.0);
    stats.assign(num_nodes * 4 * d, 0.0);
    const double* pna_w = params.data.data() + shapes.pna_w_index(t);
    const double* pna_b = params.data.data() + shapes.pna_b_index(t);

    for (size_t v = 0; v < num_nodes; ++v) {
      const size_t slot_base = slot_offsets[v];
      const size_t n = slot_offsets[v + 1] - slot_base;
      double* m0 = msgs.data() + slot_base * d;
      std::memcpy(m0, h0.data() + v * d, d * sizeof(double));
      size_t slot = 1;
      view.for_in_edges(
          static_cast<EntityId>(v), [&](const Edge& e, EdgeId) {
            const double* hz = h_prev.data() + static_cast<size_t>(e.head) * d;
            const double* rv = relvec.data() + static_cast<size_t>(e.rel) * d;
            double* m = msgs.data() + (slot_base + slot) * d;
            for (size_t k = 0; k < d; ++k) m[k] = hz[k] * rv[k];
            ++slot;
            ++touches;
          });

      double* stat = stats.data() + v * 4 * d;
      double* s_mean = stat;
      double* s_max = stat + d;
      double* s_min = stat + 2 * d;
      double* s_std = stat + 3 * d;
      const double inv_n = 1.0 / static_cast<double>(n);
      for (size_t k = 0; k < d; ++k) {
        double sum = 0.0, mx = msgs[slot_base * d + k], mn = mx;
        for (size_t s = 0; s < n; ++s) {
          const double m = msgs[(slot_base + s) * d + k];
          sum += m;
          mx = std::max(mx, m);
          mn = std::min(mn, m);
        }
        const double mean = sum * inv_n;
        double var = 0.0;
        for (size_t s = 0; s < n; ++s) {
          const double diff = msgs[(slot_base + s) * d + k] - mean;
          var += diff * diff;
        }
        var *= inv_n;
        s_mean[k] = mean;
        s_max[k] = mx;
        s_min[k] = mn;
        s_std[k] = std::sqrt(var + kStdEpsilon) - kStdShift;
      }

      double* h_out = h_cur.data() + v * d;
      for (size_t i = 0; i < d; ++i) {
        double acc = pna_b[i];
        const double* row = pna_w + i * 4 * d;
        for (size_t j = 0; j < 4 * d; ++j) acc += row[j] * stat[j];
        h_out[i] = acc > 0.0 ? acc : 0.0;
      }
    }

    if (!std::all_of(h_cur.begin(), h_cur.end(),
                     [](double v) { return std::isfinite(v); })) {
      raise("gnn: non-finite activation after layer ", t + 1);
    }
    if (tape) {
      tape->msgs[static_cast<size_t>(t)] = msgs;
      tape->stats[static_cast<size_t>(t)] = stats;
      tape->relvec[static_cast<size_t>(t)] = relvec;
      tape->h[static_cast<size_t>(t) + 1] = h_cur;
    }
    std::swap(h_prev, h_cur);
  }
  if (edge_touches) *edge_touches += touches;

  // Output head: per-entity MLP on h_T, then sigmoid.
  FuzzySet out(num_nodes);
  const int L = shapes.mlp_layers;
  std::vector<double> act_a, act_b;
  for (size_t v = 0; v < num_nodes; ++v) {
    const double* input = h_prev.data() + v * d;
    act_a.assign(input, input + d);
    for (int l = 0; l < L; ++l) {
      const size_t in_dim = static_cast<size_t>(shapes.mlp_in[l]);
      const size_t out_dim = static_cast<size_t>(shapes.mlp_out[l]);
      const double* w = params.data.data() + shapes.mlp_w_off[l];
      const double* b = params.data.data() + shapes.mlp_b_off[l];
      act_b.assign(out_dim, 0.0);
      for (size_t i = 0; i < out_dim; ++i) {
        double acc = b[i];
        const double* row = w + i * in_dim;
        for (size_t j = 0; j < in_dim; ++j) acc += row[j] * act_a[j];
        act_b[i] = l + 1 < L ? (acc > 0.0 ? acc : 0.0) : acc;
      }
      if (tape && l + 1 < L) {
        auto& layer_act = tape->mlp_act[static_cast<size_t>(l)];
        if (layer_act.empty()) layer_act.resize(num_nodes * out_dim);
        std::memcpy(layer_act.data() + v * out_dim, act_b.data(),
                    out_dim * sizeof(double));
      }
      std::swap(act_a, act_b);
    }
    out[v] = sigmoid(act_a[0]);
  }
  check_finite(out.values, "output layer");
  if (tape) tape->out = out.values;
  return out;
}

void gnn_backward(const GnnTape& tape, const GnnParameters& params,
                  std::span<const double> grad_out,
                  std::span<double> grad_params, std::span<double> grad_x) {
  const GnnShapes shapes = params.shapes();
  const size_t d = static_cast<size_t>(shapes.dim);
  const size_t num_nodes = tape.num_nodes;
  const int T = shapes.num_layers;
  const int L = shapes.mlp_layers;

  if (grad_out.size() != num_nodes) {
    raise("gnn backward: grad_out size ", grad_out.size(), " vs ", num_nodes);
  }
  if (grad_params.size() != shapes.total) {
    raise("gnn backward: grad buffer size mismatch");
  }
  if (!grad_x.empty() && grad_x.size() != num_nodes) {
    raise("gnn backward: grad_x size ", grad_x.size(), " vs ", num_nodes);
  }
  if (tape.h.size() != static_cast<size_t>(T) + 1 || tape.out.empty()) {
    raise("gnn backward: tape does not match parameter shapes");
  }

  const double* q = params.data.data() + shapes.query_index(tape.rel);
  std::vector<double> grad_q(d, 0.0);

  // MLP + sigmoid backward, per entity.
  std::vector<double> gh(num_nodes * d, 0.0);
  std::vector<double> gz_a, gz_b;
  for (size_t v = 0; v < num_nodes; ++v) {
    const double y = tape.out[v];
    gz_a.assign(1, grad_out[v] * y * (1.0 - y));
    for (int l = L - 1; l >= 0; --l) {
      const size_t in_dim = static_cast<size_t>(shapes.mlp_in[l]);
      const size_t out_dim = static_cast<size_t>(shapes.mlp_out[l]);
      const double* w = params.data.data() + shapes.mlp_w_off[l];
      double* gw = grad_params.data() + shapes.mlp_w_off[l];
      double* gb = grad_params.data() + shapes.mlp_b_off[l];
      const double* a_prev =
          l == 0 ? tape.h[static_cast<size_t>(T)].data() + v * d
                 : tape.mlp_act[static_cast<size_t>(l) - 1].data() +
                       v * static_cast<size_t>(shapes.mlp_out[l - 1]);
      gz_b.assign(in_dim, 0.0);
      for (size_t i = 0; i < out_dim; ++i) {
        const double g = gz_a[i];
        if (g == 0.0) continue;
        double* grow = gw + i * in_dim;
        const double* row = w + i * in_dim;
        for (size_t j = 0; j < in_dim; ++j) {
          grow[j] += g * a_prev[j];
          gz_b[j] += row[j] * g;
        }
        gb[i] += g;
      }
      if (l > 0) {
        // ReLU gate on the hidden activation that produced a_prev.
        for (size_t j = 0; j < in_dim; ++j) {
          if (a_prev[j] <= 0.0) gz_b[j] = 0.0;
        }
      }
      std::swap(gz_a, gz_b);
    }
    std::memcpy(gh.data() + v * d, gz_a.data(), d * sizeof(double));
  }

  // Message-passing layers, in reverse.
  std::vector<double> gh0(num_nodes * d, 0.0);
  std::vector<double> gh_prev(num_nodes * d);
  std::vector<double> grelv(static_cast<size_t>(shapes.num_edge_rels) * d);
  std::vector<double> gcat(4 * d);
  std::vector<size_t> argmax(d), argmin(d);

  for (int t = T - 1; t >= 0; --t) {
    const auto& h_out = tape.h[static_cast<size_t>(t) + 1];
    const auto& h_in = tape.h[static_cast<size_t>(t)];
    const auto& msgs = tape.msgs[static_cast<size_t>(t)];
    const auto& stats = tape.stats[static_cast<size_t>(t)];
    const auto& relvec = tape.relvec[static_cast<size_t>(t)];
    const double* pna_w = params.data.data() + shapes.pna_w_index(t);
    double* g_pna_w = grad_params.data() + shapes.pna_w_index(t);
    double* g_pna_b = grad_params.data() + shapes.pna_b_index(t);

    std::fill(gh_prev.begin(), gh_prev.end(), 0.0);
    std::fill(grelv.begin(), grelv.end(), 0.0);

    for (size_t v = 0; v < num_nodes; ++v) {
      const size_t slot_base = tape.slot_offsets[v];
      const size_t n = tape.slot_offsets[v + 1] - slot_base;
      const double* stat = stats.data() + v * 4 * d;
      const double* s_mean = stat;
      const double* s_max = stat + d;
      const double* s_min = stat + 2 * d;
      const double* s_std = stat + 3 * d;
      const double inv_n = 1.0 / static_cast<double>(n);

      // ReLU gate, then the aggregate projection backward.
      std::fill(gcat.begin(), gcat.end(), 0.0);
      bool any = false;
      for (size_t i = 0; i < d; ++i) {
        if (h_out[v * d + i] <= 0.0) continue;
        const double g = gh[v * d + i];
        if (g == 0.0) continue;
        any = true;
        const double* row = pna_w + i * 4 * d;
        double* grow = g_pna_w + i * 4 * d;
        for (size_t j = 0; j < 4 * d; ++j) {
          grow[j] += g * stat[j];
          gcat[j] += row[j] * g;
        }
        g_pna_b[i] += g;
      }
      if (!any) continue;

      const double* g_mean = gcat.data();
      const double* g_max = gcat.data() + d;
      const double* g_min = gcat.data() + 2 * d;
      const double* g_std = gcat.data() + 3 * d;

      // First slot attaining the extremum carries its gradient, matching
      // the forward scan order.
      for (size_t k = 0; k < d; ++k) {
        size_t amax = 0, amin = 0;
        const double mx = s_max[k], mn = s_min[k];
        for (size_t s = 0; s < n; ++s) {
          if (msgs[(slot_base + s) * d + k] == mx) {
            amax = s;
            break;
          }
        }
        for (size_t s = 0; s < n; ++s) {
          if (msgs[(slot_base + s) * d + k] == mn) {
            amin = s;
            break;
          }
        }
        argmax[k] = amax;
        argmin[k] = amin;
      }

      auto slot_grad = [&](size_t s, size_t k) {
        const double m = msgs[(slot_base + s) * d + k];
        double g = g_mean[k] * inv_n;
        if (argmax[k] == s) g += g_max[k];
        if (argmin[k] == s) g += g_min[k];
        g += g_std[k] * (m - s_mean[k]) * inv_n / (s_std[k] + kStdShift);
        return g;
      };
      for (size_t k = 0; k < d; ++k) {
        gh0[v * d + k] += slot_grad(0, k);
      }
      size_t slot = 1;
      tape.view.for_in_edges(
          static_cast<EntityId>(v), [&](const Edge& e, EdgeId) {
            const size_t u = static_cast<size_t>(e.head);
            const size_t r = static_cast<size_t>(e.rel);
            for (size_t k = 0; k < d; ++k) {
              const double gm = slot_grad(slot, k);
              if (gm == 0.0) continue;
              gh_prev[u * d + k] += gm * relvec[r * d + k];
              grelv[r * d + k] += gm * h_in[u * d + k];
            }
            ++slot;
          });
    }

    // relvec = W_r q + b_r backward.
    for (RelationId r = 0; r < shapes.num_edge_rels; ++r) {
      const double* grv = grelv.data() + static_cast<size_t>(r) * d;
      const double* w = params.data.data() + shapes.msg_w_index(t, r);
      double* gw = grad_params.data() + shapes.msg_w_index(t, r);
      double* gb = grad_params.data() + shapes.msg_b_index(t, r);
      for (size_t i = 0; i < d; ++i) {
        const double g = grv[i];
        if (g == 0.0) continue;
        double* grow = gw + i * d;
        const double* row = w + i * d;
        for (size_t j = 0; j < d; ++j) {
          grow[j] += g * q[j];
          grad_q[j] += row[j] * g;
        }
        gb[i] += g;
      }
    }

    std::swap(gh, gh_prev);
  }

  // What is left in gh is the gradient on h0 through layer-1 messages; the
  // self slots accumulated into gh0 across all layers.
  for (size_t i = 0; i < num_nodes * d; ++i) gh0[i] += gh[i];

  for (size_t v = 0; v < num_nodes; ++v) {
    const double xv = tape.x[v];
    double gx = 0.0;
    for (size_t k = 0; k < d; ++k) {
      const double g = gh0[v * d + k];
      grad_q[k] += xv * g;
      gx += q[k] * g;
    }
    if (!grad_x.empty()) grad_x[v] += gx;
  }
  double* gq_out = grad_params.data() + shapes.query_index(tape.rel);
  for (size_t k = 0; k < d; ++k) gq_out[k] += grad_q[k];
}

void NeuralProjector::project(std::span<const Request> requests,
                              std::span<FuzzySet> out) {
  calls_.fetch_add(1, std::memory_order_relaxed);
  std::vector<uint64_t> touches(requests.size(), 0);
  parallel_for(requests.size(), threads_, [&](size_t i) {
    out[i] = gnn_forward(*requests[i].input, requests[i].relation,
                         *requests[i].view, *params_, nullptr, &touches[i]);
  });
  uint64_t total = 0;
  for (uint64_t t : touches) total += t;
  edge_touches_.fetch_add(total, std::memory_order_relaxed);
}

void NeuralProjector::project_captured(
    std::span<const Request> requests, std::span<FuzzySet> out,
    std::span<std::shared_ptr<ProjectionTape>> tapes) {
  calls_.fetch_add(1, std::memory_order_relaxed);
  std::vector<uint64_t> touches(requests.size(), 0);
  parallel_for(requests.size(), threads_, [&](size_t i) {
    auto tape = std::make_shared<GnnTape>();
    out[i] = gnn_forward(*requests[i].input, requests[i].relation,
                         *requests[i].view, *params_, tape.get(), &touches[i]);
    tapes[i] = std::move(tape);
  });
  uint64_t total = 0;
  for (uint64_t t : touches) total += t;
  edge_touches_.fetch_add(total, std::memory_order_relaxed);
}

namespace {

constexpr char kMagic[4] = {'G', 'Q', 'E', '1'};
constexpr uint32_t kVersion = 1;

void put_u32(std::string& buf, uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& buf, uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& buf, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  put_u64(buf, bits);
}

class Reader {
 public:
  Reader(const std::string& data, const std::string& path)
      : data_(data), path_(path) {}

  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<uint32_t>(static_cast<uint8_t>(data_[pos_ + i]))
           << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<uint64_t>(static_cast<uint8_t>(data_[pos_ + i]))
           << (8 * i);
    }
    pos_ += 8;
    return v;
  }

  double f64() {
    const uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }

  void raw(char* dst, size_t n) {
    need(n);
    std::memcpy(dst, data_.data() + pos_, n);
    pos_ += n;
  }

  size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(size_t n) {
    if (pos_ + n > data_.size()) {
      raise("checkpoint ", path_, ": truncated file");
    }
  }
  const std::string& data_;
  const std::string& path_;
  size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const GnnParameters& params, const std::string& path) {
  const GnnShapes shapes = params.shapes();
  if (params.data.size() != shapes.total) {
    raise("save_checkpoint: parameter blob size mismatch");
  }
  std::string buf;
  buf.reserve(64 + params.data.size() * 8);
  buf.append(kMagic, 4);
  put_u32(buf, kVersion);
  put_u32(buf, static_cast<uint32_t>(params.config.num_layers));
  put_u32(buf, static_cast<uint32_t>(params.config.hidden_dim));
  put_u32(buf, static_cast<uint32_t>(params.config.mlp_layers));
  put_u32(buf, static_cast<uint32_t>(params.config.mlp_hidden));
  put_u32(buf, static_cast<uint32_t>(params.num_relations));
  put_u64(buf, params.data.size());
  for (double v : params.data) put_f64(buf, v);
  write_file(path, buf);
}

GnnParameters load_checkpoint(const std::string& path) {
  const std::string data = read_file(path);
  Reader reader(data, path);
  char magic[4];
  reader.raw(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) {
    raise("checkpoint ", path, ": bad magic");
  }
  const uint32_t version = reader.u32();
  if (version != kVersion) {
    raise("checkpoint ", path, ": unsupported format version ", version);
  }
  GnnParameters params;
  params.config.num_layers = static_cast<int>(reader.u32());
  params.config.hidden_dim = static_cast<int>(reader.u32());
  params.config.mlp_layers = static_cast<int>(reader.u32());
  params.config.mlp_hidden = static_cast<int>(reader.u32());
  params.num_relations = static_cast<int>(reader.u32());
  const GnnShapes shapes = params.shapes();
  const uint64_t count = reader.u64();
  if (count != shapes.total) {
    raise("checkpoint ", path, ": array count ", count,
          " does not match config (expected ", shapes.total, ")");
  }
  params.data.resize(shapes.total);
  for (double& v : params.data) v = reader.f64();
  if (reader.remaining() != 0) {
    raise("checkpoint ", path, ": trailing bytes after arrays");
  }
  return params;
}

}  // namespace folq
