// Copyright (c) 2026 sstrace authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sstrace/autodiff.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "sstrace/error.hpp"

namespace sstrace::ad {

namespace {

std::string shape_str(const Mat& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_tape(const Value& a, const Value& b, const char* op) {
  if (&a.tape() != &b.tape())
    fail("shape", std::string(op) + ": operands live on different tapes");
}

void require_same_shape(const Value& a, const Value& b, const char* op) {
  require_same_tape(a, b, op);
  if (a.rows() != b.rows() || a.cols() != b.cols())
    fail("shape", std::string(op) + ": shape mismatch (" + shape_str(a.val()) +
                      ") vs (" + shape_str(b.val()) + ")");
}

void require_vector(const Value& v, const char* op) {
  if (v.rows() != 1 && v.cols() != 1)
    fail("shape",
         std::string(op) + ": expected a vector, got (" + shape_str(v.val()) + ")");
}

}  // namespace

const Mat& Value::val() const { return tape_->val(node_); }
const Mat& Value::grad() const { return tape_->grad_of(node_); }

double Value::scalar() const {
  const Mat& m = val();
  if (m.rows() != 1 || m.cols() != 1)
    fail("shape", "scalar(): value is (" + shape_str(m) + "), expected 1x1");
  return m(0, 0);
}

Tape& Value::tape() const {
  if (tape_ == nullptr) fail("eval", "use of default-constructed Value");
  return *tape_;
}

Value Tape::emit(Mat value, bool differentiable, std::function<void(Tape&)> backprop) {
  Node n;
  n.value = std::move(value);
  n.backprop = std::move(backprop);
  n.differentiable = differentiable;
  nodes_.push_back(std::move(n));
  return Value(this, static_cast<int>(nodes_.size()) - 1);
}

Value Tape::input(Mat v) { return emit(std::move(v), true, nullptr); }

Value Tape::constant(Mat v) { return emit(std::move(v), false, nullptr); }

Value Tape::scalar_constant(double c) { return constant(Mat::Constant(1, 1, c)); }

const Mat& Tape::grad_of(int node) const {
  if (!grads_ready_) fail("eval", "gradient read before backward()");
  return nodes_[static_cast<std::size_t>(node)].grad;
}

void Tape::backward(const Value& root) {
  if (!root.valid() || &root.tape() != this)
    fail("eval", "backward: root not on this tape");
  if (root.rows() != 1 || root.cols() != 1)
    fail("shape", "backward: root must be 1x1, got (" + shape_str(root.val()) + ")");
  for (Node& n : nodes_) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
  grads_ready_ = true;
  nodes_[static_cast<std::size_t>(root.node())].grad(0, 0) = 1.0;
  for (auto i = static_cast<std::ptrdiff_t>(nodes_.size()) - 1; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.backprop && n.differentiable) n.backprop(*this);
  }
}

void Tape::reset() {
  nodes_.clear();
  grads_ready_ = false;
}

namespace {

// Index the next emitted node will receive.
int next_node(const Tape& t) { return static_cast<int>(t.size()); }

bool any_diff(const Tape& t, int a, int b) {
  return t.differentiable(a) || t.differentiable(b);
}

}  // namespace

Value matmul(const Value& a, const Value& b) {
  require_same_tape(a, b, "matmul");
  if (a.cols() != b.rows())
    fail("shape", "matmul: shape mismatch (" + shape_str(a.val()) + ") * (" +
                      shape_str(b.val()) + ")");
  Tape& t = a.tape();
  const int ai = a.node(), bi = b.node(), oi = next_node(t);
  return t.emit(a.val() * b.val(), any_diff(t, ai, bi), [ai, bi, oi](Tape& tp) {
    const Mat& g = tp.grad_of(oi);
    tp.accum(ai, g * tp.val(bi).transpose());
    tp.accum(bi, tp.val(ai).transpose() * g);
  });
}

Value affine(const Value& x, const Value& w, const Value& b) {
  require_same_tape(x, w, "affine");
  require_same_tape(x, b, "affine");
  if (x.cols() != w.rows() || b.rows() != 1 || b.cols() != w.cols())
    fail("shape", "affine: shape mismatch (" + shape_str(x.val()) + ") * (" +
                      shape_str(w.val()) + ") + (" + shape_str(b.val()) + ")");
  Tape& t = x.tape();
  const int xi = x.node(), wi = w.node(), bi = b.node(), oi = next_node(t);
  Mat out = x.val() * w.val();
  out.rowwise() += b.val().row(0);
  const bool diff = any_diff(t, xi, wi) || t.differentiable(bi);
  return t.emit(std::move(out), diff, [xi, wi, bi, oi](Tape& tp) {
    const Mat& g = tp.grad_of(oi);
    tp.accum(xi, g * tp.val(wi).transpose());
    tp.accum(wi, tp.val(xi).transpose() * g);
    tp.accum(bi, g.colwise().sum());
  });
}

Value add(const Value& a, const Value& b) {
  require_same_shape(a, b, "add");
  Tape& t = a.tape();
  const int ai = a.node(), bi = b.node(), oi = next_node(t);
  return t.emit(a.val() + b.val(), any_diff(t, ai, bi), [ai, bi, oi](Tape& tp) {
    tp.accum(ai, tp.grad_of(oi));
    tp.accum(bi, tp.grad_of(oi));
  });
}

Value sub(const Value& a, const Value& b) {
  require_same_shape(a, b, "sub");
  Tape& t = a.tape();
  const int ai = a.node(), bi = b.node(), oi = next_node(t);
  return t.emit(a.val() - b.val(), any_diff(t, ai, bi), [ai, bi, oi](Tape& tp) {
    tp.accum(ai, tp.grad_of(oi));
    tp.accum(bi, -tp.grad_of(oi));
  });
}

Value cmul(const Value& a, const Value& b) {
  require_same_shape(a, b, "cmul");
  Tape& t = a.tape();
  const int ai = a.node(), bi = b.node(), oi = next_node(t);
  return t.emit(a.val().cwiseProduct(b.val()), any_diff(t, ai, bi),
                [ai, bi, oi](Tape& tp) {
                  const Mat& g = tp.grad_of(oi);
                  tp.accum(ai, g.cwiseProduct(tp.val(bi)));
                  tp.accum(bi, g.cwiseProduct(tp.val(ai)));
                });
}

Value cdiv(const Value& a, const Value& b) {
  require_same_shape(a, b, "cdiv");
  Tape& t = a.tape();
  const int ai = a.node(), bi = b.node(), oi = next_node(t);
  return t.emit(a.val().cwiseQuotient(b.val()), any_diff(t, ai, bi),
                [ai, bi, oi](Tape& tp) {
                  const Mat& g = tp.grad_of(oi);
                  const Mat& bv = tp.val(bi);
                  tp.accum(ai, g.cwiseQuotient(bv));
                  tp.accum(bi, -(g.cwiseProduct(tp.val(ai))
                                     .cwiseQuotient(bv.cwiseProduct(bv))));
                });
}

Value vscale(const Value& a, const Value& s) {
  require_same_tape(a, s, "vscale");
  if (s.rows() != 1 || s.cols() != 1)
    fail("shape", "vscale: scale must be 1x1, got (" + shape_str(s.val()) + ")");
  Tape& t = a.tape();
  const int ai = a.node(), si = s.node(), oi = next_node(t);
  return t.emit(a.val() * s.val()(0, 0), any_diff(t, ai, si), [ai, si, oi](Tape& tp) {
    const Mat& g = tp.grad_of(oi);
    tp.accum(ai, g * tp.val(si)(0, 0));
    tp.accum(si, Mat::Constant(1, 1, g.cwiseProduct(tp.val(ai)).sum()));
  });
}

Value scale(const Value& a, double c) {
  Tape& t = a.tape();
  const int ai = a.node(), oi = next_node(t);
  return t.emit(a.val() * c, t.differentiable(ai),
                [ai, oi, c](Tape& tp) { tp.accum(ai, tp.grad_of(oi) * c); });
}

Value add_scalar(const Value& a, double c) {
  Tape& t = a.tape();
  const int ai = a.node(), oi = next_node(t);
  return t.emit(a.val().array() + c, t.differentiable(ai),
                [ai, oi](Tape& tp) { tp.accum(ai, tp.grad_of(oi)); });
}

Value transpose(const Value& a) {
  Tape& t = a.tape();
  const int ai = a.node(), oi = next_node(t);
  return t.emit(a.val().transpose(), t.differentiable(ai),
                [ai, oi](Tape& tp) { tp.accum(ai, tp.grad_of(oi).transpose()); });
}

Value tanh(const Value& a) {
  Tape& t = a.tape();
  const int ai = a.node(), oi = next_node(t);
  return t.emit(a.val().array().tanh(), t.differentiable(ai), [ai, oi](Tape& tp) {
    const Mat& y = tp.val(oi);
    tp.accum(ai, tp.grad_of(oi).cwiseProduct((1.0 - y.array().square()).matrix()));
  });
}

Value exp(const Value& a) {
  Tape& t = a.tape();
  const int ai = a.node(), oi = next_node(t);
  return t.emit(a.val().array().exp(), t.differentiable(ai), [ai, oi](Tape& tp) {
    tp.accum(ai, tp.grad_of(oi).cwiseProduct(tp.val(oi)));
  });
}

Value log(const Value& a) {
  Tape& t = a.tape();
  const int ai = a.node(), oi = next_node(t);
  return t.emit(a.val().array().log(), t.differentiable(ai), [ai, oi](Tape& tp) {
    tp.accum(ai, tp.grad_of(oi).cwiseQuotient(tp.val(ai)));
  });
}

Value sqrt(const Value& a) {
  Tape& t = a.tape();
  const int ai = a.node(), oi = next_node(t);
  return t.emit(a.val().array().sqrt(), t.differentiable(ai), [ai, oi](Tape& tp) {
    tp.accum(ai, (tp.grad_of(oi).array() * 0.5 / tp.val(oi).array()).matrix());
  });
}

// max(a, floor); gradient passes only where a is strictly above the floor.
Value clamp_min(const Value& a, double floor) {
  Tape& t = a.tape();
  const int ai = a.node(), oi = next_node(t);
  return t.emit(a.val().cwiseMax(floor), t.differentiable(ai),
                [ai, oi, floor](Tape& tp) {
                  const Mat mask =
                      (tp.val(ai).array() > floor).cast<double>().matrix();
                  tp.accum(ai, tp.grad_of(oi).cwiseProduct(mask));
                });
}

Value hcat(const Value& a, const Value& b) {
  require_same_tape(a, b, "hcat");
  if (a.rows() != b.rows())
    fail("shape", "hcat: row mismatch (" + shape_str(a.val()) + ") vs (" +
                      shape_str(b.val()) + ")");
  Tape& t = a.tape();
  const int ai = a.node(), bi = b.node(), oi = next_node(t);
  Mat out(a.rows(), a.cols() + b.cols());
  out << a.val(), b.val();
  const Eigen::Index ca = a.cols(), cb = b.cols();
  return t.emit(std::move(out), any_diff(t, ai, bi), [ai, bi, oi, ca, cb](Tape& tp) {
    const Mat& g = tp.grad_of(oi);
    tp.accum(ai, g.leftCols(ca));
    tp.accum(bi, g.rightCols(cb));
  });
}

Value sum(const Value& a) {
  Tape& t = a.tape();
  const int ai = a.node(), oi = next_node(t);
  return t.emit(Mat::Constant(1, 1, a.val().sum()), t.differentiable(ai),
                [ai, oi](Tape& tp) {
                  const Mat& av = tp.val(ai);
                  tp.accum(ai, Mat::Constant(av.rows(), av.cols(),
                                             tp.grad_of(oi)(0, 0)));
                });
}

Value softmax(const Value& v) {
  require_vector(v, "softmax");
  if (v.val().size() == 0) fail("empty", "softmax: empty input");
  Tape& t = v.tape();
  const int vi = v.node(), oi = next_node(t);
  const double m = v.val().maxCoeff();
  Mat y = (v.val().array() - m).exp();
  y /= y.sum();
  return t.emit(std::move(y), t.differentiable(vi), [vi, oi](Tape& tp) {
    const Mat& y_ = tp.val(oi);
    const Mat& g = tp.grad_of(oi);
    const double d = g.cwiseProduct(y_).sum();
    tp.accum(vi, (y_.array() * (g.array() - d)).matrix());
  });
}

Value stack_scalars(Tape& tape, std::span<const Value> scalars) {
  if (scalars.empty()) fail("empty", "stack_scalars: empty input");
  Mat out(static_cast<Eigen::Index>(scalars.size()), 1);
  std::vector<int> ids;
  ids.reserve(scalars.size());
  bool diff = false;
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    const Value& s = scalars[i];
    if (&s.tape() != &tape) fail("shape", "stack_scalars: value on another tape");
    out(static_cast<Eigen::Index>(i), 0) = s.scalar();
    ids.push_back(s.node());
    diff = diff || tape.differentiable(s.node());
  }
  const int oi = next_node(tape);
  return tape.emit(std::move(out), diff, [ids = std::move(ids), oi](Tape& tp) {
    const Mat& g = tp.grad_of(oi);
    for (std::size_t i = 0; i < ids.size(); ++i)
      tp.accum(ids[i], Mat::Constant(1, 1, g(static_cast<Eigen::Index>(i), 0)));
  });
}

Value dot(const Value& u, const Value& v) { return sum(cmul(u, v)); }

Value norm(const Value& v) { return sqrt(sum(cmul(v, v))); }

Value cosine(const Value& u, const Value& v) {
  return cdiv(dot(u, v), cmul(norm(u), norm(v)));
}

Value logsumexp(const Value& v) {
  require_vector(v, "logsumexp");
  const double m = v.val().maxCoeff();
  return add_scalar(log(sum(exp(add_scalar(v, -m)))), m);
}

}  // namespace sstrace::ad
