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

#include "sstrace/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sstrace/error.hpp"

namespace sstrace {

double cosine(const Vec& u, const Vec& v) {
  if (u.size() != v.size())
    fail("shape", "cosine: dimension mismatch " + std::to_string(u.size()) + " vs " +
                      std::to_string(v.size()));
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) fail("degenerate", "cosine: zero-norm vector");
  return std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
}

Vec softmax(const Vec& logits) {
  if (logits.size() == 0) fail("empty", "softmax: empty input");
  const double m = logits.maxCoeff();
  Vec y = (logits.array() - m).exp();
  return y / y.sum();
}

double relative_error(double a, double b, double floor) {
  const double denom = std::max({std::abs(a), std::abs(b), floor});
  return std::abs(a - b) / denom;
}

namespace {

double eval_plain(const ScalarFn& f, const Mat& params) {
  ad::Tape tape;
  const ad::Value x = tape.constant(params);
  return f(tape, x).scalar();
}

}  // namespace

GradCheckReport grad_check(const ScalarFn& f, const Mat& params, double tolerance,
                           double step) {
  if (tolerance <= 0.0) fail("config", "grad_check: tolerance must be positive");

  ad::Tape tape;
  const ad::Value x = tape.input(params);
  const ad::Value y = f(tape, x);
  if (!std::isfinite(y.scalar())) fail("eval", "grad_check: f(params) is not finite");
  tape.backward(y);
  const Mat analytic = x.grad();

  GradCheckReport report;
  report.tolerance = tolerance;
  Mat probe = params;
  for (Eigen::Index c = 0; c < params.cols(); ++c) {
    for (Eigen::Index r = 0; r < params.rows(); ++r) {
      const double saved = probe(r, c);
      probe(r, c) = saved + step;
      const double fp = eval_plain(f, probe);
      probe(r, c) = saved - step;
      const double fm = eval_plain(f, probe);
      probe(r, c) = saved;
      if (!std::isfinite(fp) || !std::isfinite(fm))
        fail("eval", "grad_check: f not finite near params");
      const double fd = (fp - fm) / (2.0 * step);
      const double err = relative_error(analytic(r, c), fd);
      if (err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst_row = r;
        report.worst_col = c;
      }
    }
  }
  report.pass = report.max_rel_error < tolerance;
  return report;
}

}  // namespace sstrace
