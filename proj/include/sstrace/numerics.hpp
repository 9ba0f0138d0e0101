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

#include "sstrace/autodiff.hpp"
#include "sstrace/types.hpp"

namespace sstrace {

// Cosine similarity, clamped to [-1, 1] against rounding.
// Throws a "degenerate" error on a zero-norm input.
double cosine(const Vec& u, const Vec& v);

// Numerically stable softmax (max subtraction). Throws "empty" on size 0.
Vec softmax(const Vec& logits);

// Relative error with a small denominator floor so that near-zero gradient
// pairs are compared absolutely rather than blowing up the ratio.
double relative_error(double a, double b, double floor = 1e-4);

struct GradCheckReport {
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  Eigen::Index worst_row = -1;
  Eigen::Index worst_col = -1;
};

// A scalar function of one parameter matrix, expressed as a tape program.
using ScalarFn = std::function<ad::Value(ad::Tape&, const ad::Value&)>;

// Compares the tape gradient of f at `params` against central finite
// differences with the given step. Throws "eval" if f(params) is not finite.
GradCheckReport grad_check(const ScalarFn& f, const Mat& params, double tolerance,
                           double step = 1e-4);

}  // namespace sstrace
