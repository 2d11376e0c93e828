#pragma once

#include <functional>
#include <map>
#include <span>
#include <vector>

#include "folq/bench.hpp"
#include "folq/gnn.hpp"
#include "folq/rng.hpp"

namespace folq {

struct TrainConfig {
  double dropout_p = 0.25;
  double learning_rate = 5e-3;
  int batch_size = 32;
  int iterations = 1000;
  /// 0 disables self-adversarial weighting of negatives.
  double adversarial_temperature = 0.0;
  enum class SampleWeighting { kUniformQueries, kUniformAnswers };
  SampleWeighting weighting = SampleWeighting::kUniformQueries;
  bool pair_inverse_dropout = true;
  uint64_t seed = 0;
  int threads = 1;

  void validate() const;
};

struct OptimizerState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  int64_t step = 0;

  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;
};

OptimizerState make_optimizer(const GnnParameters& params);

/// Bias-corrected adaptive-moment update (one step).
void adaptive_moment_update(GnnParameters& params,
                            std::span<const double> grads,
                            OptimizerState& opt, double learning_rate);

struct BceLoss {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d pred, per entity
};

/// Mean log loss over answers plus mean log loss over all non-answers
/// (no negative sampling). With a positive temperature the negative terms
/// are softmax-weighted by logit(pred)/tau, weights treated as constants.
BceLoss bce_loss(const FuzzySet& pred, std::span<const EntityId> answers,
                 double adversarial_temperature = 0.0);

/// Edges to hide per projection node for one training step.
struct DropoutPlan {
  std::map<NodeId, std::vector<EdgeId>> masked;
};

/// Masks each traversed edge independently with probability p; with
/// pair_inverses the edge's inverse twin is masked alongside it.
DropoutPlan make_dropout_plan(const EdgeUsageRecord& record, double p,
                              bool pair_inverses, const KnowledgeGraph& graph,
                              Rng& rng);

/// Reverse-mode through a recorded execution. With gate_projection_inputs
/// every projection treats its popped operand as a constant, so gradients
/// reach only the projections nearest the loss (chains stay gated).
void backpropagate_record(const SampleRecord& record,
                          const GnnParameters& params,
                          std::span<const double> grad_result,
                          bool gate_projection_inputs,
                          std::span<double> grad_params);

/// Training-ready sample: compiled program plus the edge-usage record on
/// the training graph.
struct TrainItem {
  const QuerySample* sample = nullptr;
  PostfixProgram program;
  EdgeUsageRecord usage;
};

std::vector<TrainItem> prepare_training_items(
    std::span<const QuerySample> samples, const KnowledgeGraph& train_graph);

/// One optimizer step over a batch: per-sample dropout views, recorded
/// batched execution, loss, gated backward, adaptive-moment update.
double train_step(std::span<const TrainItem* const> batch,
                  GnnParameters& params, OptimizerState& opt,
                  const TrainConfig& config,
                  const KnowledgeGraph& train_graph, uint64_t step_index);

struct TrainRun {
  TrainConfig train;
  GnnConfig gnn;
  int eval_interval = 0;  // steps between on_eval calls; 0 = never
  int snapshot_interval = 0;  // steps between on_snapshot calls; 0 = never
  std::function<void(int64_t step, double loss)> on_step;
  std::function<bool(int64_t step, const GnnParameters&)> on_eval;  // false stops
  std::function<void(int64_t step, const GnnParameters&)> on_snapshot;
};

/// Full loop: init, iterate train_step over seeded batches, return the
/// final parameters.
GnnParameters run_training(std::span<const QuerySample> train_samples,
                           const KnowledgeGraph& train_graph,
                           const TrainRun& run);

}  // namespace folq
