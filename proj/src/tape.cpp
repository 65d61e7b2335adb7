#include "egad/tape.hpp"

#include <string>

#include "egad/errors.hpp"

namespace egad {

Var Tape::leaf(NdArray value, const char* name) {
  TapeNode n;
  n.value = std::move(value);
  n.op = name;
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

Var Tape::record(const char* op, NdArray value, std::vector<Var> parents, BackwardFn backward) {
  if (check_finite_ && !value.all_finite()) {
    throw NumericError(std::string("non-finite values produced by op '") + op + "'");
  }
  TapeNode n;
  n.value = std::move(value);
  n.parents = std::move(parents);
  n.backward = std::move(backward);
  n.op = op;
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

NdArray& Tape::grad(Var v) {
  TapeNode& n = node(v);
  if (!n.grad_set) {
    n.grad = NdArray(n.value.shape());
    n.grad_set = true;
  }
  return n.grad;
}

NdArray Tape::grad_or_zero(Var v) const {
  const TapeNode& n = node(v);
  if (n.grad_set) return n.grad;
  return NdArray(n.value.shape());
}

void Tape::accumulate(Var v, const NdArray& g) {
  NdArray& acc = grad(v);
  check_same_shape(acc, g, "gradient accumulation");
  double* dst = acc.data();
  const double* src = g.data();
  const std::int64_t n = acc.size();
  for (std::int64_t i = 0; i < n; ++i) dst[i] += src[i];
}

void Tape::backward(Var loss) {
  wants_.clear();
  run_backward(loss);
}

void Tape::backward(Var loss, const std::vector<Var>& wanted) {
  if (wanted.empty()) {
    backward(loss);
    return;
  }
  // wants_[i]: node i lies below some wanted leaf, so its gradient is needed.
  wants_.assign(nodes_.size(), 0);
  for (Var w : wanted) wants_[static_cast<std::size_t>(w.id)] = 1;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (wants_[i]) continue;
    for (Var p : nodes_[i].parents) {
      if (wants_[static_cast<std::size_t>(p.id)]) {
        wants_[i] = 1;
        break;
      }
    }
  }
  run_backward(loss);
  wants_.clear();
}

void Tape::run_backward(Var loss) {
  if (!loss.valid() || static_cast<std::size_t>(loss.id) >= nodes_.size()) {
    throw ShapeError("backward: invalid loss node");
  }
  if (node(loss).value.size() != 1) {
    throw ShapeError("backward: loss must be scalar, got shape " + shape_str(node(loss).value.shape()));
  }
  grad(loss).fill(1.0);
  for (std::int32_t i = loss.id; i >= 0; --i) {
    TapeNode& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.grad_set || !n.backward) continue;
    if (!wants_.empty() && !wants_[static_cast<std::size_t>(i)]) continue;
    if (check_finite_ && !n.grad.all_finite()) {
      throw NumericError(std::string("non-finite gradient at op '") + n.op + "'");
    }
    n.backward(*this, Var{i});
  }
}

void Tape::zero_grads() {
  for (TapeNode& n : nodes_) {
    n.grad = NdArray();
    n.grad_set = false;
  }
}

}  // namespace egad
