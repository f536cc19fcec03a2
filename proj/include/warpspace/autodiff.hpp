// Copyright (c) 2026, the warpspace authors
// SPDX-License-Identifier: Apache-2.0
//
// Minimal reverse-mode automatic differentiation over dense 64-bit tensors.
// Operations execute eagerly and record themselves on a Tape; backward()
// replays the tape in exact reverse order. A Tape is single-threaded;
// independent tapes may run concurrently.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "warpspace/errors.hpp"
#include "warpspace/types.hpp"

namespace warpspace {

class Tape;

/// One node's payload: shape, row-major data, and an optional gradient
/// buffer that accumulates across backward() calls until the tape is reset.
struct Tensor {
  Shape shape;
  Eigen::VectorXd data;
  Eigen::VectorXd grad;
  bool requires_grad = false;
  bool has_grad = false;

  std::int64_t size() const { return data.size(); }
};

/// Lightweight handle to a node on a tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
  const Tensor& tensor() const;
  const Shape& shape() const;
  const Eigen::VectorXd& values() const;
  double value() const;  // scalar nodes only
  const Eigen::VectorXd& grad() const;
};

namespace detail {
struct OpArgs {
  int in0 = -1, in1 = -1;
  int i0 = 0, i1 = 0;
  double x0 = 0.0;
};
using BackwardFn = void (*)(Tape&, int self, const OpArgs&);
}  // namespace detail

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  /// Records a leaf holding a copy of `values`.
  Var leaf(const Shape& shape, const Eigen::VectorXd& values, bool requires_grad);
  Var constant(const Shape& shape, const Eigen::VectorXd& values) {
    return leaf(shape, values, false);
  }
  Var scalar(double v, bool requires_grad = false);

  /// Drops all nodes but keeps their buffers for reuse by the next graph.
  void reset() { count_ = 0; }

  int size() const { return count_; }
  const Tensor& node(int id) const { return slots_[id].t; }
  Tensor& node(int id) { return slots_[id].t; }

  /// Reverse sweep from a scalar loss. Every reachable requires_grad node
  /// gets its grad populated; grads accumulate additively across calls.
  void backward(int loss_id);

  // --- op-recording internals -------------------------------------------
  int emplace(Shape shape, bool requires_grad, detail::BackwardFn fn, detail::OpArgs args);
  Eigen::VectorXd& data(int id) { return slots_[id].t.data; }
  const Eigen::VectorXd& cdata(int id) const { return slots_[id].t.data; }
  Eigen::VectorXd& flow(int id) { return flow_[id]; }
  bool wants_flow(int id) const { return id >= 0 && slots_[id].t.requires_grad; }

  template <typename Expr>
  void accumulate(int id, const Expr& e) {
    if (wants_flow(id)) flow_[id] += e;
  }

 private:
  struct Slot {
    Tensor t;
    detail::BackwardFn backward = nullptr;
    detail::OpArgs args;
  };
  // Deque keeps Tensor references stable while ops append new slots.
  std::deque<Slot> slots_;
  std::vector<Eigen::VectorXd> flow_;
  int count_ = 0;
};

// --- elementwise ----------------------------------------------------------
// Binary ops accept equal shapes, or a scalar (1-element tensor) on either
// side, which broadcasts.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);  // divisor must be scalar
Var neg(Var a);
Var scale(Var a, double c);
Var add_const(Var a, double c);
Var exp(Var a);
Var square(Var a);
Var sqrt(Var a);
Var tanh(Var a);
Var sin(Var a);
Var cos(Var a);
Var leaky_relu(Var a, double negative_slope);

// --- reductions and structure ----------------------------------------------
Var reduce_sum(Var a);                    // any shape -> (1)
Var row_sums(Var a);                      // (m, n) -> (m)
Var sub_rowvec(Var a, Var v);             // (m, n) - broadcast (n) -> (m, n)
Var reshape(Var a, const Shape& shape);   // same element count
Var at(Var a, int index);                 // (n) -> (1)
Var concat(Var a, Var b);                 // (m) + (n) -> (m+n)
Var bipolar_expand(Var a);                // (m) -> (2m): +a_j, -a_j interleaved
Var pair_duplicate(Var a);                // (m) -> (2m): a_j, a_j interleaved
Var matmul(Var a, Var b);                 // (m, n) x (n, p) -> (m, p)

// --- image ops (N, C, H, W) -------------------------------------------------
Var conv2d(Var x, Var kernel, int stride);  // valid convolution, no padding
Var add_channel_bias(Var x, Var bias);      // bias shape (C)
Var global_avg_pool(Var x);                 // -> (N, C)
Var concat_channels(Var a, Var b);          // along C

// --- losses -----------------------------------------------------------------
/// -log softmax(logits)[label], stabilized by max subtraction.
Var cross_entropy(Var logits, int label);
/// |pred - target| with subgradient 0 at the kink.
Var mean_absolute_error(Var pred, double target);

inline void backward(Var loss) { loss.tape->backward(loss.id); }

// --- Var accessors -----------------------------------------------------------
inline const Tensor& Var::tensor() const { return tape->node(id); }
inline const Shape& Var::shape() const { return tape->node(id).shape; }
inline const Eigen::VectorXd& Var::values() const { return tape->node(id).data; }
inline double Var::value() const {
  const Tensor& t = tape->node(id);
  if (t.size() != 1) throw ContractViolation("value() requires a scalar node");
  return t.data[0];
}
inline const Eigen::VectorXd& Var::grad() const {
  const Tensor& t = tape->node(id);
  if (!t.has_grad) throw ContractViolation("node has no gradient; run backward first");
  return t.grad;
}

}  // namespace warpspace
