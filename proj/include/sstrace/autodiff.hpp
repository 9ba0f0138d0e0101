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

#pragma once

#include <functional>
#include <span>
#include <vector>

#include "sstrace/types.hpp"

namespace sstrace::ad {

class Tape;

// Handle to one node on a Tape. Cheap to copy; invalidated by Tape::reset().
class Value {
 public:
  Value() = default;

  const Mat& val() const;
  const Mat& grad() const;
  Eigen::Index rows() const { return val().rows(); }
  Eigen::Index cols() const { return val().cols(); }
  double scalar() const;  // requires a 1x1 value

  Tape& tape() const;
  int node() const { return node_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Value(Tape* tape, int node) : tape_(tape), node_(node) {}
  Tape* tape_ = nullptr;
  int node_ = -1;
};

// Reverse-mode tape over dense matrix values. Nodes are appended in
// evaluation order; backward() replays them in exact reverse creation order
// and accumulates gradients additively, so a value used twice receives the
// sum of both contributions. One tape, one thread.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Differentiable leaf (parameters, inputs under test).
  Value input(Mat v);
  // Leaf excluded from gradient accumulation (data, frozen embeddings).
  Value constant(Mat v);
  Value scalar_constant(double c);

  // Seeds `root` (must be 1x1) with gradient one and sweeps the tape
  // backward. Gradients of earlier backward() calls are discarded.
  void backward(const Value& root);

  void reset();  // drops all nodes, keeps capacity
  std::size_t size() const { return nodes_.size(); }

  // Plumbing for op implementations; not part of the public surface.
  Value emit(Mat value, bool differentiable, std::function<void(Tape&)> backprop);
  const Mat& val(int node) const { return nodes_[static_cast<std::size_t>(node)].value; }
  const Mat& grad_of(int node) const;
  bool differentiable(int node) const {
    return nodes_[static_cast<std::size_t>(node)].differentiable;
  }

  // Adds an arbitrary Eigen expression into a node's gradient without
  // materializing a temporary. No-op for non-differentiable nodes.
  template <class Derived>
  void accum(int node, const Eigen::MatrixBase<Derived>& g) {
    Node& n = nodes_[static_cast<std::size_t>(node)];
    if (!n.differentiable) return;
    n.grad.noalias() += g;
  }

 private:
  struct Node {
    Mat value;
    Mat grad;
    std::function<void(Tape&)> backprop;  // empty for leaves
    bool differentiable = true;
  };
  std::vector<Node> nodes_;
  bool grads_ready_ = false;
};

// Primitives. Each registers its local gradient rule on the tape.
Value matmul(const Value& a, const Value& b);
// x @ w + b broadcast over rows; x is n x in, w is in x out, b is 1 x out.
Value affine(const Value& x, const Value& w, const Value& b);
Value add(const Value& a, const Value& b);
Value sub(const Value& a, const Value& b);
Value cmul(const Value& a, const Value& b);  // elementwise product
Value cdiv(const Value& a, const Value& b);  // elementwise quotient
Value vscale(const Value& a, const Value& s);  // s is 1x1
Value scale(const Value& a, double c);
Value add_scalar(const Value& a, double c);
Value transpose(const Value& a);
Value tanh(const Value& a);
Value exp(const Value& a);
Value log(const Value& a);
Value sqrt(const Value& a);
Value clamp_min(const Value& a, double floor);
Value hcat(const Value& a, const Value& b);
Value sum(const Value& a);  // 1x1
Value softmax(const Value& v);  // vector (n x 1 or 1 x n), max-subtracted
Value stack_scalars(Tape& tape, std::span<const Value> scalars);  // n x 1

// Composed helpers.
Value dot(const Value& u, const Value& v);
Value norm(const Value& v);
Value cosine(const Value& u, const Value& v);  // callers ensure nonzero norms
Value logsumexp(const Value& v);

inline Value operator+(const Value& a, const Value& b) { return add(a, b); }
inline Value operator-(const Value& a, const Value& b) { return sub(a, b); }
inline Value operator-(const Value& a) { return scale(a, -1.0); }

}  // namespace sstrace::ad
