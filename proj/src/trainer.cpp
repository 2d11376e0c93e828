#include "folq/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "folq/threading.hpp"

namespace folq {

namespace {
constexpr double kProbClamp = 1e-9;  // floor/ceiling before logs
}

void TrainConfig::validate() const {
  if (dropout_p < 0.0 || dropout_p > 1.0) {
    raise("train config: dropout_p must lie in [0, 1]");
  }
  if (learning_rate <= 0.0) raise("train config: learning_rate must be > 0");
  if (batch_size < 1) raise("train config: batch_size must be >= 1");
  if (iterations < 0) raise("train config: iterations must be >= 0");
  if (adversarial_temperature < 0.0) {
    raise("train config: adversarial_temperature must be >= 0");
  }
}

OptimizerState make_optimizer(const GnnParameters& params) {
  OptimizerState opt;
  opt.first_moment.assign(params.data.size(), 0.0);
  opt.second_moment.assign(params.data.size(), 0.0);
  return opt;
}

void adaptive_moment_update(GnnParameters& params,
                            std::span<const double> grads,
                            OptimizerState& opt, double learning_rate) {
  if (grads.size() != params.data.size() ||
      opt.first_moment.size() != params.data.size()) {
    raise("optimizer: shape mismatch");
  }
  ++opt.step;
  const double b1 = OptimizerState::kBeta1;
  const double b2 = OptimizerState::kBeta2;
  const double bias1 = 1.0 - std::pow(b1, static_cast<double>(opt.step));
  const double bias2 = 1.0 - std::pow(b2, static_cast<double>(opt.step));
  for (size_t i = 0; i < grads.size(); ++i) {
    const double g = grads[i];
    opt.first_moment[i] = b1 * opt.first_moment[i] + (1.0 - b1) * g;
    opt.second_moment[i] = b2 * opt.second_moment[i] + (1.0 - b2) * g * g;
    const double m_hat = opt.first_moment[i] / bias1;
    const double v_hat = opt.second_moment[i] / bias2;
    params.data[i] -=
        learning_rate * m_hat / (std::sqrt(v_hat) + OptimizerState::kEpsilon);
  }
}

BceLoss bce_loss(const FuzzySet& pred, std::span<const EntityId> answers,
                 double adversarial_temperature) {
  const size_t n = pred.size();
  if (answers.empty()) raise("bce_loss: empty answer set");
  std::vector<uint8_t> is_answer(n, 0);
  size_t num_answers = 0;
  for (EntityId a : answers) {
    if (a < 0 || static_cast<size_t>(a) >= n) {
      raise("bce_loss: answer id ", a, " out of range");
    }
    if (!is_answer[static_cast<size_t>(a)]) {
      is_answer[static_cast<size_t>(a)] = 1;
      ++num_answers;
    }
  }
  if (num_answers == n) raise("bce_loss: every entity is an answer");
  const size_t num_neg = n - num_answers;

  BceLoss result;
  result.grad.assign(n, 0.0);
  auto clamped = [](double p) {
    return std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  };
  auto inside = [](double p) {
    return p > kProbClamp && p < 1.0 - kProbClamp;
  };

  double pos = 0.0;
  for (size_t v = 0; v < n; ++v) {
    if (!is_answer[v]) continue;
    const double p = clamped(pred[v]);
    pos += std::log(p);
    if (inside(pred[v])) {
      result.grad[v] -= 1.0 / (static_cast<double>(num_answers) * p);
    }
  }

  double negative = 0.0;
  if (adversarial_temperature > 0.0) {
    // Self-adversarial weights over the negatives: softmax of
    // logit(p)/tau, treated as constants in the gradient.
    std::vector<double> logits;
    logits.reserve(num_neg);
    double max_logit = -std::numeric_limits<double>::infinity();
    for (size_t v = 0; v < n; ++v) {
      if (is_answer[v]) continue;
      const double p = clamped(pred[v]);
      const double logit = std::log(p / (1.0 - p)) / adversarial_temperature;
      logits.push_back(logit);
      max_logit = std::max(max_logit, logit);
    }
    double z = 0.0;
    for (double l : logits) z += std::exp(l - max_logit);
    size_t idx = 0;
    for (size_t v = 0; v < n; ++v) {
      if (is_answer[v]) continue;
      const double w = std::exp(logits[idx++] - max_logit) / z;
      const double p = clamped(pred[v]);
      negative += w * std::log(1.0 - p);
      if (inside(pred[v])) {
        result.grad[v] += w / (1.0 - p);
      }
    }
  } else {
    for (size_t v = 0; v < n; ++v) {
      if (is_answer[v]) continue;
      const double p = clamped(pred[v]);
      negative += std::log(1.0 - p);
      if (inside(pred[v])) {
        result.grad[v] += 1.0 / (static_cast<double>(num_neg) * (1.0 - p));
      }
    }
    negative /= static_cast<double>(num_neg);
  }

  result.loss = -pos / static_cast<double>(num_answers) - negative;
  return result;
}

DropoutPlan make_dropout_plan(const EdgeUsageRecord& record, double p,
                              bool pair_inverses, const KnowledgeGraph& graph,
                              Rng& rng) {
  if (p < 0.0 || p > 1.0) raise("dropout: probability outside [0, 1]");
  DropoutPlan plan;
  for (const auto& [node, edges] : record.edges_by_node) {
    std::vector<EdgeId> masked;
    for (EdgeId e : edges) {
      if (!rng.bernoulli(p)) continue;
      masked.push_back(e);
      if (pair_inverses) masked.push_back(graph.inverse_edge(e));
    }
    std::sort(masked.begin(), masked.end());
    masked.erase(std::unique(masked.begin(), masked.end()), masked.end());
    plan.masked[node] = std::move(masked);
  }
  return plan;
}

void backpropagate_record(const SampleRecord& record,
                          const GnnParameters& params,
                          std::span<const double> grad_result,
                          bool gate_projection_inputs,
                          std::span<double> grad_params) {
  const auto& code = record.program->code;
  if (code.empty()) raise("backpropagate: empty program");
  const size_t n = record.values.back().size();
  if (grad_result.size() != n) raise("backpropagate: grad size mismatch");

  std::vector<std::vector<double>> grads(code.size());
  grads.back().assign(grad_result.begin(), grad_result.end());

  auto ensure = [&grads, n](int32_t idx) -> std::vector<double>& {
    auto& g = grads[static_cast<size_t>(idx)];
    if (g.empty()) g.assign(n, 0.0);
    return g;
  };

  for (size_t i = code.size(); i-- > 0;) {
    const auto& g = grads[i];
    if (g.empty()) continue;
    const Instruction& ins = code[i];
    const auto [op0, op1] = record.operands[i];
    switch (ins.op) {
      case OpCode::kPushAnchor:
        break;  // constants
      case OpCode::kProject: {
        const auto* tape = dynamic_cast<const GnnTape*>(record.tapes[i].get());
        if (!tape) raise("backpropagate: projection ", i, " has no tape");
        if (gate_projection_inputs) {
          gnn_backward(*tape, params, g, grad_params, {});
        } else {
          auto& gin = ensure(op0);
          gnn_backward(*tape, params, g, grad_params, gin);
        }
        break;
      }
      case OpCode::kAnd: {
        const auto& a = record.values[static_cast<size_t>(op0)];
        const auto& b = record.values[static_cast<size_t>(op1)];
        auto& ga = ensure(op0);
        auto& gb = ensure(op1);
        for (size_t v = 0; v < n; ++v) {
          ga[v] += g[v] * b[v];
          gb[v] += g[v] * a[v];
        }
        break;
      }
      case OpCode::kOr: {
        const auto& a = record.values[static_cast<size_t>(op0)];
        const auto& b = record.values[static_cast<size_t>(op1)];
        auto& ga = ensure(op0);
        auto& gb = ensure(op1);
        for (size_t v = 0; v < n; ++v) {
          ga[v] += g[v] * (1.0 - b[v]);
          gb[v] += g[v] * (1.0 - a[v]);
        }
        break;
      }
      case OpCode::kNot: {
        auto& ga = ensure(op0);
        for (size_t v = 0; v < n; ++v) ga[v] -= g[v];
        break;
      }
    }
    grads[i].clear();
  }
}

std::vector<TrainItem> prepare_training_items(
    std::span<const QuerySample> samples, const KnowledgeGraph& train_graph) {
  std::vector<TrainItem> items;
  items.reserve(samples.size());
  const GraphView view(train_graph);
  for (const QuerySample& s : samples) {
    if (!template_by_name(s.qtype).trainable) {
      raise("training: query type '", s.qtype, "' is evaluation-only");
    }
    TrainItem item;
    item.sample = &s;
    item.program = compile_postfix(s.ast);
    item.usage = collect_traversed_edges(s.ast, view);
    items.push_back(std::move(item));
  }
  return items;
}

double train_step(std::span<const TrainItem* const> batch,
                  GnnParameters& params, OptimizerState& opt,
                  const TrainConfig& config,
                  const KnowledgeGraph& train_graph, uint64_t step_index) {
  config.validate();
  if (batch.empty()) raise("train step: empty batch");
  const size_t batch_size = batch.size();
  const size_t num_entities = train_graph.num_entities();

  // Per-sample dropout plans; stream layout keeps reruns byte-identical.
  const Rng dropout_root = Rng(config.seed).fork(1).fork(step_index);
  std::vector<DropoutPlan> plans(batch_size);
  for (size_t i = 0; i < batch_size; ++i) {
    Rng rng = dropout_root.fork(i);
    plans[i] = make_dropout_plan(batch[i]->usage, config.dropout_p,
                                 config.pair_inverse_dropout, train_graph,
                                 rng);
  }

  std::vector<PostfixProgram> programs;
  programs.reserve(batch_size);
  for (const TrainItem* item : batch) programs.push_back(item->program);

  auto view_for = [&](size_t sample, NodeId node) {
    const auto& masked = plans[sample].masked;
    auto it = masked.find(node);
    if (it == masked.end() || it->second.empty()) {
      return GraphView(train_graph);
    }
    return GraphView(train_graph, it->second);
  };

  NeuralProjector projector(params, config.threads);
  auto records =
      execute_batch_recorded(programs, projector, view_for, num_entities);

  std::vector<BceLoss> losses(batch_size);
  double weight_norm = 0.0;
  std::vector<double> weights(batch_size, 0.0);
  for (size_t i = 0; i < batch_size; ++i) {
    const auto answers = batch[i]->sample->all_answers();
    losses[i] = bce_loss(records[i].result(), answers,
                         config.adversarial_temperature);
    weights[i] = config.weighting == TrainConfig::SampleWeighting::kUniformQueries
                     ? 1.0
                     : static_cast<double>(answers.size());
    weight_norm += weights[i];
  }
  for (double& w : weights) w /= weight_norm;

  double total_loss = 0.0;
  for (size_t i = 0; i < batch_size; ++i) {
    total_loss += weights[i] * losses[i].loss;
  }

  const size_t param_count = params.data.size();
  std::vector<std::vector<double>> sample_grads(batch_size);
  parallel_for(batch_size, config.threads, [&](size_t i) {
    sample_grads[i].assign(param_count, 0.0);
    std::vector<double> root_grad = losses[i].grad;
    for (double& g : root_grad) g *= weights[i];
    backpropagate_record(records[i], params, root_grad,
                         /*gate_projection_inputs=*/true, sample_grads[i]);
  });

  std::vector<double> grads(param_count, 0.0);
  for (size_t i = 0; i < batch_size; ++i) {
    for (size_t k = 0; k < param_count; ++k) grads[k] += sample_grads[i][k];
  }
  for (double g : grads) {
    if (!std::isfinite(g)) {
      raise("train step ", step_index, ": non-finite gradient");
    }
  }
  if (!std::isfinite(total_loss)) {
    raise("train step ", step_index, ": non-finite loss");
  }

  adaptive_moment_update(params, grads, opt, config.learning_rate);
  return total_loss;
}

GnnParameters run_training(std::span<const QuerySample> train_samples,
                           const KnowledgeGraph& train_graph,
                           const TrainRun& run) {
  run.train.validate();
  if (train_samples.empty()) raise("training: no samples");
  const auto items = prepare_training_items(train_samples, train_graph);

  GnnParameters params =
      init_params(run.gnn, static_cast<int>(train_graph.num_relations()),
                  run.train.seed);
  OptimizerState opt = make_optimizer(params);

  const Rng batch_root = Rng(run.train.seed).fork(0);
  std::vector<const TrainItem*> batch(
      static_cast<size_t>(run.train.batch_size));
  for (int64_t step = 0; step < run.train.iterations; ++step) {
    Rng rng = batch_root.fork(static_cast<uint64_t>(step));
    for (auto& slot : batch) {
      slot = &items[rng.uniform_int(items.size())];
    }
    const double loss = train_step(batch, params, opt, run.train, train_graph,
                                   static_cast<uint64_t>(step));
    if (run.on_step) run.on_step(step, loss);
    if (run.snapshot_interval > 0 && run.on_snapshot &&
        (step + 1) % run.snapshot_interval == 0) {
      run.on_snapshot(step + 1, params);
    }
    if (run.eval_interval > 0 && run.on_eval &&
        (step + 1) % run.eval_interval == 0) {
      if (!run.on_eval(step + 1, params)) break;
    }
  }
  return params;
}

}  // namespace folq
