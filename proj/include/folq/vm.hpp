#pragma once

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include "folq/fuzzy.hpp"
#include "folq/kg.hpp"
#include "folq/query.hpp"

namespace folq {

/// Opaque per-projection capture; concrete projectors derive from it.
struct ProjectionTape {
  virtual ~ProjectionTape() = default;
};

/// Batched relation-projection capability. Item i's output must depend on
/// item i's inputs only, so batched and per-item calls agree bitwise.
class Projector {
 public:
  struct Request {
    const FuzzySet* input;
    RelationId relation;
    const GraphView* view;
  };

  virtual ~Projector() = default;

  virtual void project(std::span<const Request> requests,
                       std::span<FuzzySet> out) = 0;

  /// Capture variant used by training; fills one tape per request.
  virtual void project_captured(
      std::span<const Request> requests, std::span<FuzzySet> out,
      std::span<std::shared_ptr<ProjectionTape>> tapes);
};

/// Fuzzy set produced at every AST node of an executed program.
struct ExecutionTrace {
  std::map<NodeId, FuzzySet> node_sets;

  const FuzzySet& at(NodeId id) const;
};

/// Execute one program: anchors push singletons, logic opcodes apply the
/// product fuzzy operations, kProject calls the projector.
FuzzySet execute(const PostfixProgram& program, Projector& projector,
                 const GraphView& view, ExecutionTrace* trace = nullptr);

/// Barrier-synchronized batched execution. Every sample runs its own
/// instruction stream; samples arriving at a projection wait until all
/// still-active samples are also at one, then the pending projections go
/// out as a single batched projector call. Results are bitwise identical
/// to per-sample execute.
std::vector<FuzzySet> execute_batch(std::span<const PostfixProgram> programs,
                                    Projector& projector,
                                    std::span<const GraphView> views);

/// Differentiable execution record for one sample: per-instruction values,
/// operand wiring, and the projector tapes needed for reverse mode.
struct SampleRecord {
  const PostfixProgram* program = nullptr;
  std::vector<FuzzySet> values;                       // per instruction
  std::vector<std::array<int32_t, 2>> operands;       // instruction indices
  std::vector<std::shared_ptr<ProjectionTape>> tapes;  // kProject only

  const FuzzySet& result() const { return values.back(); }
};

/// Per-sample, per-projection-node view selection (dropout plumbing).
using ViewProvider = std::function<GraphView(size_t sample, NodeId node)>;

/// Batched execution with capture, one record per sample. view_for is
/// consulted once per (sample, projection node).
std::vector<SampleRecord> execute_batch_recorded(
    std::span<const PostfixProgram> programs, Projector& projector,
    const ViewProvider& view_for, size_t num_entities);

}  // namespace folq
