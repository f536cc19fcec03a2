// Copyright (c) 2026, the warpspace authors
// SPDX-License-Identifier: Apache-2.0
//
#include "warpspace/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace warpspace {

using detail::OpArgs;

std::string shape_to_string(const Shape& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

namespace {

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw ContractViolation(std::string(op) + ": incompatible shapes " + shape_to_string(a) +
                          " and " + shape_to_string(b));
}

void require_same_tape(const char* op, Var a, Var b) {
  if (a.tape == nullptr || a.tape != b.tape)
    throw ContractViolation(std::string(op) + ": operands must live on the same tape");
}

bool is_scalar(const Tensor& t) { return t.size() == 1; }

// 4D tensors are (N, C, H, W) row-major.
struct Dims4 {
  int n, c, h, w;
};

Dims4 dims4(const char* op, const Tensor& t) {
  if (t.shape.size() != 4)
    throw ContractViolation(std::string(op) + ": expected a 4-d tensor, got " +
                            shape_to_string(t.shape));
  return {t.shape[0], t.shape[1], t.shape[2], t.shape[3]};
}

using CRowMap = Eigen::Map<const RowMat>;
using RowMap = Eigen::Map<RowMat>;

}  // namespace

// --- tape -------------------------------------------------------------------

int Tape::emplace(Shape shape, bool requires_grad, detail::BackwardFn fn, OpArgs args) {
  const auto numel = shape_numel(shape);
  if (numel <= 0) throw ContractViolation("tensor shape must have positive extent");
  if (count_ == static_cast<int>(slots_.size())) slots_.emplace_back();
  Slot& s = slots_[count_];
  s.t.shape = std::move(shape);
  s.t.data.resize(numel);
  s.t.requires_grad = requires_grad;
  s.t.has_grad = false;
  s.backward = fn;
  s.args = args;
  return count_++;
}

Var Tape::leaf(const Shape& shape, const Eigen::VectorXd& values, bool requires_grad) {
  if (shape_numel(shape) != values.size())
    throw ContractViolation("leaf: data length " + std::to_string(values.size()) +
                            " does not match shape " + shape_to_string(shape));
  const int id = emplace(shape, requires_grad, nullptr, {});
  data(id) = values;
  return {this, id};
}

Var Tape::scalar(double v, bool requires_grad) {
  const int id = emplace({1}, requires_grad, nullptr, {});
  data(id)[0] = v;
  return {this, id};
}

void Tape::backward(int loss_id) {
  if (loss_id < 0 || loss_id >= count_) throw ContractViolation("backward: bad node id");
  if (slots_[loss_id].t.size() != 1)
    throw ContractViolation("backward requires a scalar loss node");

  if (static_cast<int>(flow_.size()) < count_) flow_.resize(count_);
  for (int i = 0; i < count_; ++i) {
    if (slots_[i].t.requires_grad) {
      flow_[i].resize(slots_[i].t.size());
      flow_[i].setZero();
    }
  }
  if (slots_[loss_id].t.requires_grad) flow_[loss_id][0] = 1.0;

  for (int i = count_ - 1; i >= 0; --i) {
    const Slot& s = slots_[i];
    if (s.backward != nullptr && s.t.requires_grad) s.backward(*this, i, s.args);
  }

  for (int i = 0; i < count_; ++i) {
    Tensor& t = slots_[i].t;
    if (!t.requires_grad) continue;
    if (!t.has_grad) {
      t.grad.resize(t.size());
      t.grad.setZero();
      t.has_grad = true;
    }
    t.grad += flow_[i];
  }
}

// --- elementwise binary -------------------------------------------------------

namespace {

void back_add_same(Tape& t, int self, const OpArgs& a) {
  t.accumulate(a.in0, t.flow(self));
  t.accumulate(a.in1, t.flow(self));
}
// scalar operand is in1; i0 = +1 for add, -1 for "tensor - scalar"
void back_addsub_scalar(Tape& t, int self, const OpArgs& a) {
  t.accumulate(a.in0, t.flow(self));
  if (t.wants_flow(a.in1)) t.flow(a.in1)[0] += a.i0 * t.flow(self).sum();
}
void back_sub_same(Tape& t, int self, const OpArgs& a) {
  t.accumulate(a.in0, t.flow(self));
  t.accumulate(a.in1, -t.flow(self));
}
// scalar - tensor; scalar is in0
void back_scalar_sub(Tape& t, int self, const OpArgs& a) {
  if (t.wants_flow(a.in0)) t.flow(a.in0)[0] += t.flow(self).sum();
  t.accumulate(a.in1, -t.flow(self));
}
void back_mul_same(Tape& t, int self, const OpArgs& a) {
  t.accumulate(a.in0, t.flow(self).cwiseProduct(t.cdata(a.in1)));
  t.accumulate(a.in1, t.flow(self).cwiseProduct(t.cdata(a.in0)));
}
// scalar operand is in1
void back_mul_scalar(Tape& t, int self, const OpArgs& a) {
  t.accumulate(a.in0, t.cdata(a.in1)[0] * t.flow(self));
  if (t.wants_flow(a.in1)) t.flow(a.in1)[0] += t.flow(self).dot(t.cdata(a.in0));
}
void back_div_scalar(Tape& t, int self, const OpArgs& a) {
  const double b = t.cdata(a.in1)[0];
  t.accumulate(a.in0, t.flow(self) / b);
  if (t.wants_flow(a.in1)) t.flow(a.in1)[0] -= t.flow(self).dot(t.cdata(a.in0)) / (b * b);
}

}  // namespace

Var add(Var a, Var b) {
  require_same_tape("add", a, b);
  Tape& tp = *a.tape;
  const Tensor& ta = tp.node(a.id);
  const Tensor& tb = tp.node(b.id);
  const bool req = ta.requires_grad || tb.requires_grad;
  if (ta.shape == tb.shape) {
    const int id = tp.emplace(ta.shape, req, &back_add_same, {.in0 = a.id, .in1 = b.id});
    tp.data(id) = ta.data + tb.data;
    return {&tp, id};
  }
  if (is_scalar(tb)) {
    const int id =
        tp.emplace(ta.shape, req, &back_addsub_scalar, {.in0 = a.id, .in1 = b.id, .i0 = 1});
    tp.data(id) = (ta.data.array() + tb.data[0]).matrix();
    return {&tp, id};
  }
  if (is_scalar(ta)) return add(b, a);
  shape_error("add", ta.shape, tb.shape);
}

Var sub(Var a, Var b) {
  require_same_tape("sub", a, b);
  Tape& tp = *a.tape;
  const Tensor& ta = tp.node(a.id);
  const Tensor& tb = tp.node(b.id);
  const bool req = ta.requires_grad || tb.requires_grad;
  if (ta.shape == tb.shape) {
    const int id = tp.emplace(ta.shape, req, &back_sub_same, {.in0 = a.id, .in1 = b.id});
    tp.data(id) = ta.data - tb.data;
    return {&tp, id};
  }
  if (is_scalar(tb)) {
    const int id =
        tp.emplace(ta.shape, req, &back_addsub_scalar, {.in0 = a.id, .in1 = b.id, .i0 = -1});
    tp.data(id) = (ta.data.array() - tb.data[0]).matrix();
    return {&tp, id};
  }
  if (is_scalar(ta)) {
    const int id = tp.emplace(tb.shape, req, &back_scalar_sub, {.in0 = a.id, .in1 = b.id});
    tp.data(id) = (ta.data[0] - tb.data.array()).matrix();
    return {&tp, id};
  }
  shape_error("sub", ta.shape, tb.shape);
}

Var mul(Var a, Var b) {
  require_same_tape("mul", a, b);
  Tape& tp = *a.tape;
  const Tensor& ta = tp.node(a.id);
  const Tensor& tb = tp.node(b.id);
  const bool req = ta.requires_grad || tb.requires_grad;
  if (ta.shape == tb.shape) {
    const int id = tp.emplace(ta.shape, req, &back_mul_same, {.in0 = a.id, .in1 = b.id});
    tp.data(id) = ta.data.cwiseProduct(tb.data);
    return {&tp, id};
  }
  if (is_scalar(tb)) {
    const int id = tp.emplace(ta.shape, req, &back_mul_scalar, {.in0 = a.id, .in1 = b.id});
    tp.data(id) = tb.data[0] * ta.data;
    return {&tp, id};
  }
  if (is_scalar(ta)) return mul(b, a);
  shape_error("mul", ta.shape, tb.shape);
}

Var div(Var a, Var b) {
  require_same_tape("div", a, b);
  Tape& tp = *a.tape;
  const Tensor& ta = tp.node(a.id);
  const Tensor& tb = tp.node(b.id);
  if (!is_scalar(tb)) throw ContractViolation("div: divisor must be a scalar node");
  const bool req = ta.requires_grad || tb.requires_grad;
  const int id = tp.emplace(ta.shape, req, &back_div_scalar, {.in0 = a.id, .in1 = b.id});
  tp.data(id) = ta.data / tb.data[0];
  return {&tp, id};
}

// --- elementwise unary --------------------------------------------------------

namespace {

void back_neg(Tape& t, int self, const OpArgs& a) { t.accumulate(a.in0, -t.flow(self)); }
void back_scale(Tape& t, int self, const OpArgs& a) {
  t.accumulate(a.in0, a.x0 * t.flow(self));
}
void back_shift_const(Tape& t, int self, const OpArgs& a) { t.accumulate(a.in0, t.flow(self)); }
void back_exp(Tape& t, int self, const OpArgs& a) {
  t.accumulate(a.in0, t.flow(self).cwiseProduct(t.cdata(self)));
}
void back_square(Tape& t, int self, const OpArgs& a) {
  t.accumulate(a.in0, 2.0 * t.flow(self).cwiseProduct(t.cdata(a.in0)));
}
void back_sqrt(Tape& t, int self, const OpArgs& a) {
  t.accumulate(a.in0, 0.5 * t.flow(self).cwiseQuotient(t.cdata(self)));
}
void back_tanh(Tape& t, int self, const OpArgs& a) {
  t.accumulate(a.in0,
               (t.flow(self).array() * (1.0 - t.cdata(self).array().square())).matrix());
}
void back_sin(Tape& t, int self, const OpArgs& a) {
  t.accumulate(a.in0, (t.flow(self).array() * t.cdata(a.in0).array().cos()).matrix());
}
void back_cos(Tape& t, int self, const OpArgs& a) {
  t.accumulate(a.in0, (-t.flow(self).array() * t.cdata(a.in0).array().sin()).matrix());
}
void back_leaky_relu(Tape& t, int self, const OpArgs& a) {
  const auto x = t.cdata(a.in0).array();
  // d/dx = 1 where x > 0, else the negative slope (including exactly at 0).
  const Eigen::ArrayXd dydx = (x > 0.0).cast<double>() * (1.0 - a.x0) + a.x0;
  t.accumulate(a.in0, (t.flow(self).array() * dydx).matrix());
}

Var unary(const char* /*op*/, Var a, detail::BackwardFn fn, double x0 = 0.0) {
  Tape& tp = *a.tape;
  const Tensor& ta = tp.node(a.id);
  const int id = tp.emplace(ta.shape, ta.requires_grad, fn, {.in0 = a.id, .x0 = x0});
  return {&tp, id};
}

}  // namespace

Var neg(Var a) {
  Var out = unary("neg", a, &back_neg);
  out.tape->data(out.id) = -a.values();
  return out;
}
Var scale(Var a, double c) {
  Var out = unary("scale", a, &back_scale, c);
  out.tape->data(out.id) = c * a.values();
  return out;
}
Var add_const(Var a, double c) {
  Var out = unary("add_const", a, &back_shift_const);
  out.tape->data(out.id) = (a.values().array() + c).matrix();
  return out;
}
Var exp(Var a) {
  Var out = unary("exp", a, &back_exp);
  out.tape->data(out.id) = a.values().array().exp().matrix();
  return out;
}
Var square(Var a) {
  Var out = unary("square", a, &back_square);
  out.tape->data(out.id) = a.values().array().square().matrix();
  return out;
}
Var sqrt(Var a) {
  Var out = unary("sqrt", a, &back_sqrt);
  out.tape->data(out.id) = a.values().array().sqrt().matrix();
  return out;
}
Var tanh(Var a) {
  Var out = unary("tanh", a, &back_tanh);
  out.tape->data(out.id) = a.values().array().tanh().matrix();
  return out;
}
Var sin(Var a) {
  Var out = unary("sin", a, &back_sin);
  out.tape->data(out.id) = a.values().array().sin().matrix();
  return out;
}
Var cos(Var a) {
  Var out = unary("cos", a, &back_cos);
  out.tape->data(out.id) = a.values().array().cos().matrix();
  return out;
}
Var leaky_relu(Var a, double negative_slope) {
  Var out = unary("leaky_relu", a, &back_leaky_relu, negative_slope);
  const auto x = a.values().array();
  out.tape->data(out.id) = (x > 0.0).select(x, negative_slope * x).matrix();
  return out;
}

// --- reductions and structure ---------------------------------------------------

namespace {

void back_reduce_sum(Tape& t, int self, const OpArgs& a) {
  if (t.wants_flow(a.in0)) t.flow(a.in0).array() += t.flow(self)[0];
}
void back_row_sums(Tape& t, int self, const OpArgs& a) {
  if (!t.wants_flow(a.in0)) return;
  const int rows = a.i0, cols = a.i1;
  RowMap g(t.flow(a.in0).data(), rows, cols);
  g.colwise() += Eigen::Map<const Eigen::VectorXd>(t.flow(self).data(), rows);
}
void back_sub_rowvec(Tape& t, int self, const OpArgs& a) {
  const int rows = a.i0, cols = a.i1;
  t.accumulate(a.in0, t.flow(self));
  if (t.wants_flow(a.in1)) {
    CRowMap f(t.flow(self).data(), rows, cols);
    Eigen::Map<Eigen::RowVectorXd>(t.flow(a.in1).data(), cols) -= f.colwise().sum();
  }
}
void back_reshape(Tape& t, int self, const OpArgs& a) { t.accumulate(a.in0, t.flow(self)); }
void back_at(Tape& t, int self, const OpArgs& a) {
  if (t.wants_flow(a.in0)) t.flow(a.in0)[a.i0] += t.flow(self)[0];
}
void back_concat(Tape& t, int self, const OpArgs& a) {
  const auto na = t.cdata(a.in0).size();
  const auto nb = t.cdata(a.in1).size();
  t.accumulate(a.in0, t.flow(self).head(na));
  t.accumulate(a.in1, t.flow(self).tail(nb));
}
void back_bipolar_expand(Tape& t, int self, const OpArgs& a) {
  if (!t.wants_flow(a.in0)) return;
  auto& g = t.flow(a.in0);
  const auto& f = t.flow(self);
  for (Eigen::Index j = 0; j < g.size(); ++j) g[j] += f[2 * j] - f[2 * j + 1];
}
void back_pair_duplicate(Tape& t, int self, const OpArgs& a) {
  if (!t.wants_flow(a.in0)) return;
  auto& g = t.flow(a.in0);
  const auto& f = t.flow(self);
  for (Eigen::Index j = 0; j < g.size(); ++j) g[j] += f[2 * j] + f[2 * j + 1];
}
void back_matmul(Tape& t, int self, const OpArgs& a) {
  const int m = a.i0, n = a.i1;
  const int p = static_cast<int>(t.cdata(a.in1).size()) / n;
  CRowMap A(t.cdata(a.in0).data(), m, n);
  CRowMap B(t.cdata(a.in1).data(), n, p);
  CRowMap F(t.flow(self).data(), m, p);
  if (t.wants_flow(a.in0)) RowMap(t.flow(a.in0).data(), m, n).noalias() += F * B.transpose();
  if (t.wants_flow(a.in1)) RowMap(t.flow(a.in1).data(), n, p).noalias() += A.transpose() * F;
}

}  // namespace

Var reduce_sum(Var a) {
  Tape& tp = *a.tape;
  const int id =
      tp.emplace({1}, tp.node(a.id).requires_grad, &back_reduce_sum, {.in0 = a.id});
  tp.data(id)[0] = a.values().sum();
  return {&tp, id};
}

Var row_sums(Var a) {
  Tape& tp = *a.tape;
  const Tensor& ta = tp.node(a.id);
  if (ta.shape.size() != 2)
    throw ContractViolation("row_sums: expected a 2-d tensor, got " + shape_to_string(ta.shape));
  const int rows = ta.shape[0], cols = ta.shape[1];
  const int id = tp.emplace({rows}, ta.requires_grad, &back_row_sums,
                            {.in0 = a.id, .i0 = rows, .i1 = cols});
  CRowMap m(ta.data.data(), rows, cols);
  Eigen::Map<Eigen::VectorXd>(tp.data(id).data(), rows) = m.rowwise().sum();
  return {&tp, id};
}

Var sub_rowvec(Var a, Var v) {
  require_same_tape("sub_rowvec", a, v);
  Tape& tp = *a.tape;
  const Tensor& ta = tp.node(a.id);
  const Tensor& tv = tp.node(v.id);
  if (ta.shape.size() != 2 || tv.size() != ta.shape[1])
    shape_error("sub_rowvec", ta.shape, tv.shape);
  const int rows = ta.shape[0], cols = ta.shape[1];
  const int id = tp.emplace(ta.shape, ta.requires_grad || tv.requires_grad, &back_sub_rowvec,
                            {.in0 = a.id, .in1 = v.id, .i0 = rows, .i1 = cols});
  RowMap out(tp.data(id).data(), rows, cols);
  out = CRowMap(ta.data.data(), rows, cols);
  out.rowwise() -= Eigen::Map<const Eigen::RowVectorXd>(tv.data.data(), cols);
  return {&tp, id};
}

Var reshape(Var a, const Shape& shape) {
  Tape& tp = *a.tape;
  const Tensor& ta = tp.node(a.id);
  if (shape_numel(shape) != ta.size())
    throw ContractViolation("reshape: element count mismatch for " + shape_to_string(shape));
  const int id = tp.emplace(shape, ta.requires_grad, &back_reshape, {.in0 = a.id});
  tp.data(id) = ta.data;
  return {&tp, id};
}

Var at(Var a, int index) {
  Tape& tp = *a.tape;
  const Tensor& ta = tp.node(a.id);
  if (index < 0 || index >= ta.size())
    throw ContractViolation("at: index " + std::to_string(index) + " out of range");
  const int id = tp.emplace({1}, ta.requires_grad, &back_at, {.in0 = a.id, .i0 = index});
  tp.data(id)[0] = ta.data[index];
  return {&tp, id};
}

Var concat(Var a, Var b) {
  require_same_tape("concat", a, b);
  Tape& tp = *a.tape;
  const Tensor& ta = tp.node(a.id);
  const Tensor& tb = tp.node(b.id);
  const int n = static_cast<int>(ta.size() + tb.size());
  const int id = tp.emplace({n}, ta.requires_grad || tb.requires_grad, &back_concat,
                            {.in0 = a.id, .in1 = b.id});
  tp.data(id) << ta.data, tb.data;
  return {&tp, id};
}

Var bipolar_expand(Var a) {
  Tape& tp = *a.tape;
  const Tensor& ta = tp.node(a.id);
  const int m = static_cast<int>(ta.size());
  const int id = tp.emplace({2 * m}, ta.requires_grad, &back_bipolar_expand, {.in0 = a.id});
  auto& out = tp.data(id);
  for (int j = 0; j < m; ++j) {
    out[2 * j] = ta.data[j];
    out[2 * j + 1] = -ta.data[j];
  }
  return {&tp, id};
}

Var pair_duplicate(Var a) {
  Tape& tp = *a.tape;
  const Tensor& ta = tp.node(a.id);
  const int m = static_cast<int>(ta.size());
  const int id = tp.emplace({2 * m}, ta.requires_grad, &back_pair_duplicate, {.in0 = a.id});
  auto& out = tp.data(id);
  for (int j = 0; j < m; ++j) {
    out[2 * j] = ta.data[j];
    out[2 * j + 1] = ta.data[j];
  }
  return {&tp, id};
}

Var matmul(Var a, Var b) {
  require_same_tape("matmul", a, b);
  Tape& tp = *a.tape;
  const Tensor& ta = tp.node(a.id);
  const Tensor& tb = tp.node(b.id);
  if (ta.shape.size() != 2 || tb.shape.size() != 2 || ta.shape[1] != tb.shape[0])
    shape_error("matmul", ta.shape, tb.shape);
  const int m = ta.shape[0], n = ta.shape[1], p = tb.shape[1];
  const int id = tp.emplace({m, p}, ta.requires_grad || tb.requires_grad, &back_matmul,
                            {.in0 = a.id, .in1 = b.id, .i0 = m, .i1 = n});
  RowMap(tp.data(id).data(), m, p).noalias() =
      CRowMap(ta.data.data(), m, n) * CRowMap(tb.data.data(), n, p);
  return {&tp, id};
}

// --- image ops -------------------------------------------------------------------

namespace {

void back_conv2d(Tape& t, int self, const OpArgs& a) {
  const Tensor& xt = t.node(a.in0);
  const Tensor& kt = t.node(a.in1);
  const int stride = a.i0;
  const int n = xt.shape[0], c = xt.shape[1], h = xt.shape[2], w = xt.shape[3];
  const int o = kt.shape[0], kh = kt.shape[2], kw = kt.shape[3];
  const Tensor& yt = t.node(self);
  const int oh = yt.shape[2], ow = yt.shape[3];

  const double* f = t.flow(self).data();
  const double* x = xt.data.data();
  const double* k = kt.data.data();
  double* gx = t.wants_flow(a.in0) ? t.flow(a.in0).data() : nullptr;
  double* gk = t.wants_flow(a.in1) ? t.flow(a.in1).data() : nullptr;

  for (int in = 0; in < n; ++in)
    for (int oc = 0; oc < o; ++oc)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          const double g = f[((in * o + oc) * oh + oy) * ow + ox];
          if (g == 0.0) continue;
          for (int ic = 0; ic < c; ++ic) {
            const int xbase = ((in * c + ic) * h + oy * stride) * w + ox * stride;
            const int kbase = (oc * c + ic) * kh * kw;
            for (int ky = 0; ky < kh; ++ky)
              for (int kx = 0; kx < kw; ++kx) {
                if (gx) gx[xbase + ky * w + kx] += g * k[kbase + ky * kw + kx];
                if (gk) gk[kbase + ky * kw + kx] += g * x[xbase + ky * w + kx];
              }
          }
        }
}

void back_channel_bias(Tape& t, int self, const OpArgs& a) {
  t.accumulate(a.in0, t.flow(self));
  if (!t.wants_flow(a.in1)) return;
  const Tensor& xt = t.node(a.in0);
  const int n = xt.shape[0], c = xt.shape[1], hw = xt.shape[2] * xt.shape[3];
  const double* f = t.flow(self).data();
  double* gb = t.flow(a.in1).data();
  for (int in = 0; in < n; ++in)
    for (int ic = 0; ic < c; ++ic) {
      double acc = 0.0;
      const double* row = f + (in * c + ic) * hw;
      for (int i = 0; i < hw; ++i) acc += row[i];
      gb[ic] += acc;
    }
}

void back_global_avg_pool(Tape& t, int self, const OpArgs& a) {
  if (!t.wants_flow(a.in0)) return;
  const Tensor& xt = t.node(a.in0);
  const int n = xt.shape[0], c = xt.shape[1], hw = xt.shape[2] * xt.shape[3];
  const double inv = 1.0 / hw;
  const double* f = t.flow(self).data();
  double* gx = t.flow(a.in0).data();
  for (int in = 0; in < n; ++in)
    for (int ic = 0; ic < c; ++ic) {
      const double g = f[in * c + ic] * inv;
      double* row = gx + (in * c + ic) * hw;
      for (int i = 0; i < hw; ++i) row[i] += g;
    }
}

void back_concat_channels(Tape& t, int self, const OpArgs& a) {
  const Tensor& at = t.node(a.in0);
  const Tensor& bt = t.node(a.in1);
  const int n = at.shape[0], ca = at.shape[1], cb = bt.shape[1];
  const int hw = at.shape[2] * at.shape[3];
  const double* f = t.flow(self).data();
  double* ga = t.wants_flow(a.in0) ? t.flow(a.in0).data() : nullptr;
  double* gb = t.wants_flow(a.in1) ? t.flow(a.in1).data() : nullptr;
  for (int in = 0; in < n; ++in) {
    const double* src = f + in * (ca + cb) * hw;
    if (ga)
      for (int i = 0; i < ca * hw; ++i) ga[in * ca * hw + i] += src[i];
    if (gb)
      for (int i = 0; i < cb * hw; ++i) gb[in * cb * hw + i] += src[ca * hw + i];
  }
}

}  // namespace

Var conv2d(Var x, Var kernel, int stride) {
  require_same_tape("conv2d", x, kernel);
  Tape& tp = *x.tape;
  const Tensor& xt = tp.node(x.id);
  const Tensor& kt = tp.node(kernel.id);
  const Dims4 xd = dims4("conv2d input", xt);
  const Dims4 kd = dims4("conv2d kernel", kt);
  if (stride < 1) throw ContractViolation("conv2d: stride must be >= 1");
  if (kd.c != xd.c || kd.h > xd.h || kd.w > xd.w)
    shape_error("conv2d", xt.shape, kt.shape);
  const int oh = (xd.h - kd.h) / stride + 1;
  const int ow = (xd.w - kd.w) / stride + 1;
  const int id = tp.emplace({xd.n, kd.n, oh, ow}, xt.requires_grad || kt.requires_grad,
                            &back_conv2d, {.in0 = x.id, .in1 = kernel.id, .i0 = stride});
  const double* xp = xt.data.data();
  const double* kp = kt.data.data();
  double* yp = tp.data(id).data();
  for (int in = 0; in < xd.n; ++in)
    for (int oc = 0; oc < kd.n; ++oc)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          double acc = 0.0;
          for (int ic = 0; ic < xd.c; ++ic) {
            const double* xbase = xp + ((in * xd.c + ic) * xd.h + oy * stride) * xd.w + ox * stride;
            const double* kbase = kp + (oc * xd.c + ic) * kd.h * kd.w;
            for (int ky = 0; ky < kd.h; ++ky)
              for (int kx = 0; kx < kd.w; ++kx) acc += xbase[ky * xd.w + kx] * kbase[ky * kd.w + kx];
          }
          yp[((in * kd.n + oc) * oh + oy) * ow + ox] = acc;
        }
  return {&tp, id};
}

Var add_channel_bias(Var x, Var bias) {
  require_same_tape("add_channel_bias", x, bias);
  Tape& tp = *x.tape;
  const Tensor& xt = tp.node(x.id);
  const Tensor& bt = tp.node(bias.id);
  const Dims4 xd = dims4("add_channel_bias", xt);
  if (bt.size() != xd.c) shape_error("add_channel_bias", xt.shape, bt.shape);
  const int id = tp.emplace(xt.shape, xt.requires_grad || bt.requires_grad, &back_channel_bias,
                            {.in0 = x.id, .in1 = bias.id});
  const int hw = xd.h * xd.w;
  auto& out = tp.data(id);
  for (int in = 0; in < xd.n; ++in)
    for (int ic = 0; ic < xd.c; ++ic)
      out.segment((in * xd.c + ic) * hw, hw) =
          (xt.data.segment((in * xd.c + ic) * hw, hw).array() + bt.data[ic]).matrix();
  return {&tp, id};
}

Var global_avg_pool(Var x) {
  Tape& tp = *x.tape;
  const Tensor& xt = tp.node(x.id);
  const Dims4 xd = dims4("global_avg_pool", xt);
  const int id =
      tp.emplace({xd.n, xd.c}, xt.requires_grad, &back_global_avg_pool, {.in0 = x.id});
  const int hw = xd.h * xd.w;
  auto& out = tp.data(id);
  for (int in = 0; in < xd.n; ++in)
    for (int ic = 0; ic < xd.c; ++ic)
      out[in * xd.c + ic] = xt.data.segment((in * xd.c + ic) * hw, hw).mean();
  return {&tp, id};
}

Var concat_channels(Var a, Var b) {
  require_same_tape("concat_channels", a, b);
  Tape& tp = *a.tape;
  const Tensor& ta = tp.node(a.id);
  const Tensor& tb = tp.node(b.id);
  const Dims4 ad = dims4("concat_channels", ta);
  const Dims4 bd = dims4("concat_channels", tb);
  if (ad.n != bd.n || ad.h != bd.h || ad.w != bd.w) shape_error("concat_channels", ta.shape, tb.shape);
  const int id = tp.emplace({ad.n, ad.c + bd.c, ad.h, ad.w}, ta.requires_grad || tb.requires_grad,
                            &back_concat_channels, {.in0 = a.id, .in1 = b.id});
  const int hw = ad.h * ad.w;
  auto& out = tp.data(id);
  for (int in = 0; in < ad.n; ++in) {
    out.segment(in * (ad.c + bd.c) * hw, ad.c * hw) = ta.data.segment(in * ad.c * hw, ad.c * hw);
    out.segment(in * (ad.c + bd.c) * hw + ad.c * hw, bd.c * hw) =
        tb.data.segment(in * bd.c * hw, bd.c * hw);
  }
  return {&tp, id};
}

// --- losses -----------------------------------------------------------------------

namespace {

Eigen::VectorXd softmax_of(const Eigen::VectorXd& logits) {
  const double m = logits.maxCoeff();
  Eigen::VectorXd p = (logits.array() - m).exp().matrix();
  return p / p.sum();
}

void back_cross_entropy(Tape& t, int self, const OpArgs& a) {
  if (!t.wants_flow(a.in0)) return;
  Eigen::VectorXd p = softmax_of(t.cdata(a.in0));
  p[a.i0] -= 1.0;
  t.flow(a.in0) += t.flow(self)[0] * p;
}

void back_mae(Tape& t, int self, const OpArgs& a) {
  if (!t.wants_flow(a.in0)) return;
  const double diff = t.cdata(a.in0)[0] - a.x0;
  const double s = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
  t.flow(a.in0)[0] += t.flow(self)[0] * s;
}

}  // namespace

Var cross_entropy(Var logits, int label) {
  Tape& tp = *logits.tape;
  const Tensor& tl = tp.node(logits.id);
  if (tl.shape.size() != 1)
    throw ContractViolation("cross_entropy: logits must be a 1-d tensor");
  if (label < 0 || label >= tl.size())
    throw ContractViolation("cross_entropy: label " + std::to_string(label) + " out of range");
  if (!tl.data.allFinite()) throw NumericError("cross_entropy: non-finite logits");
  const int id =
      tp.emplace({1}, tl.requires_grad, &back_cross_entropy, {.in0 = logits.id, .i0 = label});
  const double m = tl.data.maxCoeff();
  const double lse = m + std::log((tl.data.array() - m).exp().sum());
  tp.data(id)[0] = lse - tl.data[label];
  return {&tp, id};
}

Var mean_absolute_error(Var pred, double target) {
  Tape& tp = *pred.tape;
  const Tensor& tl = tp.node(pred.id);
  if (tl.size() != 1) throw ContractViolation("mean_absolute_error: pred must be scalar");
  if (!std::isfinite(tl.data[0]) || !std::isfinite(target))
    throw NumericError("mean_absolute_error: non-finite input");
  const int id = tp.emplace({1}, tl.requires_grad, &back_mae, {.in0 = pred.id, .x0 = target});
  tp.data(id)[0] = std::abs(tl.data[0] - target);
  return {&tp, id};
}

}  // namespace warpspace
