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

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sstrace/corpus.hpp"
#include "sstrace/trial.hpp"
#include "sstrace/types.hpp"

namespace sstrace {

struct ScoredTrial {
  Trial trial;
  double score = 0.0;  // cosine of the two embeddings
};

struct MethodBucket {
  int method_id = 0;
  Split tier = Split::train;  // earliest split the method appears in
  double eer = 0.0;
  double threshold = 0.0;
  int n_target = 0;
  int n_nontarget = 0;
};

struct EvalReport {
  double overall_eer = 0.0;
  double overall_threshold = 0.0;
  int n_target = 0;
  int n_nontarget = 0;
  std::vector<MethodBucket> buckets;  // grouped by tier, ids ascending
};

// Cosine score per trial, order preserved. Throws "lookup" naming the
// first trial id without an embedding.
std::vector<ScoredTrial> score_trials(const std::vector<Trial>& trials,
                                      const std::map<std::string, Vec>& embeddings);

// Interpolated EER. Operating points are swept over the distinct scores
// with FAR(t) = frac(nontarget >= t) and FRR(t) = frac(target < t); the
// rate is interpolated linearly between the two adjacent points where
// FAR - FRR changes sign. Returns (eer, crossing threshold).
std::pair<double, double> compute_eer(std::span<const double> target_scores,
                                      std::span<const double> nontarget_scores);
std::pair<double, double> compute_eer(const std::vector<ScoredTrial>& scored);

// Overall EER plus per-method EER, a trial bucketed by its *test*
// utterance's method. Buckets with fewer than two trials of either class
// are absent from the report rather than zero.
EvalReport per_method_report(const std::vector<ScoredTrial>& scored,
                             const CorpusManifest& manifest);

// Score file: `<enroll_id> <test_id> <score>` per line, 6 decimals.
void write_scores(const std::vector<ScoredTrial>& scored,
                  const std::filesystem::path& path);

// Report file: `overall eer=<pct> thr=<t>` then one `method <id> ...` line
// per bucket; percentages carry 3 decimals.
void write_report(const EvalReport& report, const std::filesystem::path& path);
std::string format_report(const EvalReport& report);

}  // namespace sstrace
