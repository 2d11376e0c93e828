#include "folq/vm.hpp"

#include <algorithm>

namespace folq {

void Projector::project_captured(std::span<const Request>,
                                 std::span<FuzzySet>,
                                 std::span<std::shared_ptr<ProjectionTape>>) {
  raise("projector does not support capture");
}

const FuzzySet& ExecutionTrace::at(NodeId id) const {
  auto it = node_sets.find(id);
  if (it == node_sets.end()) raise("trace: no entry for node ", id);
  return it->second;
}

namespace {

[[noreturn]] void rethrow_at(const Error& e, size_t instruction) {
  raise("instruction ", instruction, ": ", e.what());
}

}  // namespace

FuzzySet execute(const PostfixProgram& program, Projector& projector,
                 const GraphView& view, ExecutionTrace* trace) {
  const size_t num_entities = view.num_entities();
  std::vector<FuzzySet> stack;
  stack.reserve(static_cast<size_t>(program.max_stack_depth));

  auto check_depth = [&stack, &program]() {
    if (static_cast<int>(stack.size()) > program.max_stack_depth) {
      raise("vm: stack depth ", stack.size(), " exceeds program bound ",
            program.max_stack_depth);
    }
  };

  for (size_t i = 0; i < program.code.size(); ++i) {
    const Instruction& ins = program.code[i];
    switch (ins.op) {
      case OpCode::kPushAnchor:
        stack.push_back(singleton(ins.arg, num_entities));
        break;
      case OpCode::kProject: {
        if (stack.empty()) raise("vm: projection on empty stack");
        FuzzySet input = std::move(stack.back());
        stack.pop_back();
        const Projector::Request request{&input, ins.arg, &view};
        FuzzySet out;
        try {
          projector.project({&request, 1}, {&out, 1});
        } catch (const Error& e) {
          rethrow_at(e, i);
        }
        stack.push_back(std::move(out));
        break;
      }
      case OpCode::kAnd:
      case OpCode::kOr: {
        if (stack.size() < 2) raise("vm: binary op on short stack");
        FuzzySet right = std::move(stack.back());
        stack.pop_back();
        FuzzySet left = std::move(stack.back());
        stack.pop_back();
        stack.push_back(ins.op == OpCode::kAnd ? conj(left, right)
                                               : disj(left, right));
        break;
      }
      case OpCode::kNot: {
        if (stack.empty()) raise("vm: NOT on empty stack");
        FuzzySet value = std::move(stack.back());
        stack.pop_back();
        stack.push_back(neg(value));
        break;
      }
    }
    check_depth();
    if (trace) trace->node_sets[ins.node] = stack.back();
  }
  if (stack.size() != 1) {
    raise("vm: program left ", stack.size(), " values on the stack");
  }
  return std::move(stack.back());
}

namespace {

struct SampleState {
  size_t pc = 0;
  std::vector<FuzzySet> stack;
  bool done = false;
};

struct PendingProjection {
  size_t sample;
  FuzzySet input;
  RelationId relation;
  GraphView view;
};

/// Runs one sample until it needs a projection (returns the popped input)
/// or finishes. Non-projection instructions never block.
template <typename OnValue>
bool advance_to_projection(const PostfixProgram& program, SampleState& state,
                           size_t num_entities, FuzzySet& projection_input,
                           RelationId& relation, OnValue&& on_value) {
  auto need = [&state](size_t n) {
    if (state.stack.size() < n) raise("vm: operand stack underflow");
  };
  while (state.pc < program.code.size()) {
    const Instruction& ins = program.code[state.pc];
    switch (ins.op) {
      case OpCode::kPushAnchor:
        state.stack.push_back(singleton(ins.arg, num_entities));
        break;
      case OpCode::kProject:
        need(1);
        projection_input = std::move(state.stack.back());
        state.stack.pop_back();
        relation = ins.arg;
        return true;  // pc stays at the projection until its result lands
      case OpCode::kAnd:
      case OpCode::kOr: {
        need(2);
        FuzzySet right = std::move(state.stack.back());
        state.stack.pop_back();
        FuzzySet left = std::move(state.stack.back());
        state.stack.pop_back();
        state.stack.push_back(ins.op == OpCode::kAnd ? conj(left, right)
                                                     : disj(left, right));
        break;
      }
      case OpCode::kNot: {
        need(1);
        FuzzySet value = std::move(state.stack.back());
        state.stack.pop_back();
        state.stack.push_back(neg(value));
        break;
      }
    }
    if (static_cast<int>(state.stack.size()) > program.max_stack_depth) {
      raise("vm: stack depth ", state.stack.size(),
            " exceeds program bound ", program.max_stack_depth);
    }
    on_value(state.pc, state.stack.back());
    ++state.pc;
  }
  state.done = true;
  return false;
}

}  // namespace

std::vector<FuzzySet> execute_batch(std::span<const PostfixProgram> programs,
                                    Projector& projector,
                                    std::span<const GraphView> views) {
  if (programs.size() != views.size()) {
    raise("execute_batch: ", programs.size(), " programs but ", views.size(),
          " views");
  }
  const size_t batch = programs.size();
  std::vector<SampleState> states(batch);
  std::vector<FuzzySet> results(batch);

  auto discard = [](size_t, const FuzzySet&) {};

  size_t active = batch;
  // First advance: every sample runs to its first projection or completion.
  std::vector<PendingProjection> pending;
  for (size_t i = 0; i < batch; ++i) {
    FuzzySet input;
    RelationId rel = -1;
    if (advance_to_projection(programs[i], states[i], views[i].num_entities(),
                              input, rel, discard)) {
      pending.push_back({i, std::move(input), rel, views[i]});
    } else {
      --active;
    }
  }

  while (!pending.empty()) {
    // Barrier: everything still active is now waiting on a projection, so
    // the whole round goes out as one batched call.
    std::vector<Projector::Request> requests;
    requests.reserve(pending.size());
    for (const PendingProjection& p : pending) {
      requests.push_back({&p.input, p.relation, &p.view});
    }
    std::vector<FuzzySet> outputs(pending.size());
    try {
      projector.project(requests, outputs);
    } catch (const Error& e) {
      // Re-run items one at a time to tag the failing sample.
      for (size_t k = 0; k < requests.size(); ++k) {
        try {
          FuzzySet probe;
          projector.project({&requests[k], 1}, {&probe, 1});
        } catch (const Error& item_error) {
          raise("sample ", pending[k].sample, ": ", item_error.what());
        }
      }
      raise("batched projection (", pending.size(), " samples): ", e.what());
    }

    std::vector<PendingProjection> next;
    for (size_t k = 0; k < pending.size(); ++k) {
      const size_t i = pending[k].sample;
      states[i].stack.push_back(std::move(outputs[k]));
      ++states[i].pc;
      FuzzySet input;
      RelationId rel = -1;
      bool needs;
      try {
        needs = advance_to_projection(programs[i], states[i],
                                      views[i].num_entities(), input, rel,
                                      discard);
      } catch (const Error& e) {
        raise("sample ", i, ": ", e.what());
      }
      if (needs) {
        next.push_back({i, std::move(input), rel, views[i]});
      } else {
        --active;
      }
    }
    pending = std::move(next);
  }
  (void)active;

  for (size_t i = 0; i < batch; ++i) {
    if (states[i].stack.size() != 1) {
      raise("sample ", i, ": program left ", states[i].stack.size(),
            " values on the stack");
    }
    results[i] = std::move(states[i].stack.back());
  }
  return results;
}

std::vector<SampleRecord> execute_batch_recorded(
    std::span<const PostfixProgram> programs, Projector& projector,
    const ViewProvider& view_for, size_t num_entities) {
  const size_t batch = programs.size();
  std::vector<SampleState> states(batch);
  std::vector<SampleRecord> records(batch);

  // Operand wiring: simulate an index stack per sample up front.
  for (size_t i = 0; i < batch; ++i) {
    const auto& code = programs[i].code;
    records[i].program = &programs[i];
    records[i].values.resize(code.size());
    records[i].operands.assign(code.size(), {-1, -1});
    records[i].tapes.resize(code.size());
    std::vector<int32_t> index_stack;
    for (size_t pc = 0; pc < code.size(); ++pc) {
      switch (code[pc].op) {
        case OpCode::kPushAnchor:
          break;
        case OpCode::kProject:
        case OpCode::kNot:
          records[i].operands[pc][0] = index_stack.back();
          index_stack.pop_back();
          break;
        case OpCode::kAnd:
        case OpCode::kOr:
          records[i].operands[pc][1] = index_stack.back();
          index_stack.pop_back();
          records[i].operands[pc][0] = index_stack.back();
          index_stack.pop_back();
          break;
      }
      index_stack.push_back(static_cast<int32_t>(pc));
    }
  }

  std::vector<PendingProjection> pending;
  for (size_t i = 0; i < batch; ++i) {
    auto on_value = [&records, i](size_t pc, const FuzzySet& v) {
      records[i].values[pc] = v;
    };
    FuzzySet input;
    RelationId rel = -1;
    if (advance_to_projection(programs[i], states[i], num_entities, input,
                              rel, on_value)) {
      const NodeId node = programs[i].code[states[i].pc].node;
      pending.push_back({i, std::move(input), rel, view_for(i, node)});
    }
  }

  while (!pending.empty()) {
    std::vector<Projector::Request> requests;
    requests.reserve(pending.size());
    for (const PendingProjection& p : pending) {
      requests.push_back({&p.input, p.relation, &p.view});
    }
    std::vector<FuzzySet> outputs(pending.size());
    std::vector<std::shared_ptr<ProjectionTape>> tapes(pending.size());
    try {
      projector.project_captured(requests, outputs, tapes);
    } catch (const Error& e) {
      for (size_t k = 0; k < requests.size(); ++k) {
        try {
          FuzzySet probe;
          std::shared_ptr<ProjectionTape> tape;
          projector.project_captured({&requests[k], 1}, {&probe, 1},
                                     {&tape, 1});
        } catch (const Error& item_error) {
          raise("sample ", pending[k].sample, ": ", item_error.what());
        }
      }
      raise("batched projection (", pending.size(), " samples): ", e.what());
    }

    std::vector<PendingProjection> next;
    for (size_t k = 0; k < pending.size(); ++k) {
      const size_t i = pending[k].sample;
      auto& record = records[i];
      auto& state = states[i];
      record.values[state.pc] = outputs[k];
      record.tapes[state.pc] = std::move(tapes[k]);
      state.stack.push_back(std::move(outputs[k]));
      ++state.pc;
      auto on_value = [&record](size_t pc, const FuzzySet& v) {
        record.values[pc] = v;
      };
      FuzzySet input;
      RelationId rel = -1;
      bool needs;
      try {
        needs = advance_to_projection(programs[i], state, num_entities, input,
                                      rel, on_value);
      } catch (const Error& e) {
        raise("sample ", i, ": ", e.what());
      }
      if (needs) {
        const NodeId node = programs[i].code[state.pc].node;
        next.push_back({i, std::move(input), rel, view_for(i, node)});
      }
    }
    pending = std::move(next);
  }

  for (size_t i = 0; i < batch; ++i) {
    if (states[i].stack.size() != 1) {
      raise("sample ", i, ": program left ", states[i].stack.size(),
            " values on the stack");
    }
  }
  return records;
}

}  // namespace folq
