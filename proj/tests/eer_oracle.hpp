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

#include <algorithm>
#include <vector>

namespace sstrace::testing {

// Exhaustive EER oracle, deliberately independent of the implementation:
// it counts FAR/FRR by brute force at every midpoint between consecutive
// distinct scores (plus sentinels outside the range) and interpolates the
// FAR = FRR crossing on that operating-point list.
inline double eer_midpoint_oracle(std::vector<double> targets,
                                  std::vector<double> nontargets) {
  std::vector<double> all = targets;
  all.insert(all.end(), nontargets.begin(), nontargets.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());

  std::vector<double> sweep;
  sweep.push_back(all.front() - 1.0);
  for (std::size_t i = 0; i + 1 < all.size(); ++i)
    sweep.push_back(0.5 * (all[i] + all[i + 1]));
  sweep.push_back(all.back() + 1.0);

  struct Op {
    double far, frr;
  };
  std::vector<Op> ops;
  for (const double t : sweep) {
    int n_accept = 0;
    for (const double s : nontargets)
      if (s >= t) ++n_accept;
    int n_reject = 0;
    for (const double s : targets)
      if (s < t) ++n_reject;
    ops.push_back({static_cast<double>(n_accept) / nontargets.size(),
                   static_cast<double>(n_reject) / targets.size()});
  }
  for (std::size_t i = 0; i + 1 < ops.size(); ++i) {
    const double d0 = ops[i].far - ops[i].frr;
    const double d1 = ops[i + 1].far - ops[i + 1].frr;
    if (d1 > 0.0) continue;
    const double lambda = (d0 - d1) == 0.0 ? 0.0 : d0 / (d0 - d1);
    return ops[i].far + lambda * (ops[i + 1].far - ops[i].far);
  }
  return ops.back().frr;
}

}  // namespace sstrace::testing
