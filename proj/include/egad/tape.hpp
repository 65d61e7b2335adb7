#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "egad/blas.hpp"
#include "egad/ndarray.hpp"

namespace egad {

// Handle to a node on a Tape.
struct Var {
  std::int32_t id = -1;
  bool valid() const { return id >= 0; }
};

class Tape;
// Invoked with the tape and the op's own node handle during the reverse sweep.
using BackwardFn = std::function<void(Tape&, Var)>;

// Record of one forward primitive: its output value, the ids of its inputs,
// and a closure that pushes the output gradient back to them. Ops are appended
// in execution order, so ids are already a topological order and one reverse
// sweep visits each op exactly once.
struct TapeNode {
  NdArray value;
  NdArray grad;          // allocated lazily, zero-initialized
  bool grad_set = false;
  std::vector<Var> parents;
  BackwardFn backward;   // empty for leaves
  const char* op = "";
};

class Tape {
 public:
  explicit Tape(Precision precision = Precision::f64, bool check_finite = true)
      : precision_(precision), check_finite_(check_finite) {}

  Var leaf(NdArray value, const char* name = "leaf");
  Var record(const char* op, NdArray value, std::vector<Var> parents, BackwardFn backward);

  const NdArray& value(Var v) const { return node(v).value; }
  NdArray& mutable_value(Var v) { return node(v).value; }

  // Gradient accumulator for v; allocates zeros on first touch.
  NdArray& grad(Var v);
  bool has_grad(Var v) const { return node(v).grad_set; }
  // Gradient of v, or zeros of the value's shape when v is off the loss path.
  NdArray grad_or_zero(Var v) const;

  // Accumulate g into the gradient of v (shapes must match).
  void accumulate(Var v, const NdArray& g);

  // Reverse sweep from a scalar loss. When `wanted` is non-empty, backward work
  // is pruned to the subgraph between those leaves and the loss: ops whose
  // inputs cannot reach a wanted leaf are skipped, and op closures can consult
  // wants() to skip per-input gradient products.
  void backward(Var loss);
  void backward(Var loss, const std::vector<Var>& wanted);

  // During backward: whether this node's gradient is required. True for every
  // node outside a pruned sweep.
  bool wants(Var v) const { return wants_.empty() || wants_[static_cast<std::size_t>(v.id)]; }

  void zero_grads();

  Precision precision() const { return precision_; }
  std::size_t num_nodes() const { return nodes_.size(); }
  const char* op_name(Var v) const { return node(v).op; }

 private:
  TapeNode& node(Var v) { return nodes_[static_cast<std::size_t>(v.id)]; }
  const TapeNode& node(Var v) const { return nodes_[static_cast<std::size_t>(v.id)]; }
  void run_backward(Var loss);

  std::vector<TapeNode> nodes_;
  std::vector<char> wants_;  // empty outside pruned backward
  Precision precision_;
  bool check_finite_;
};

}  // namespace egad
