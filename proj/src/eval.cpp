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

#include "sstrace/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "sstrace/error.hpp"
#include "sstrace/numerics.hpp"
#include "sstrace/text_io.hpp"

namespace sstrace {

std::vector<ScoredTrial> score_trials(const std::vector<Trial>& trials,
                                      const std::map<std::string, Vec>& embeddings) {
  const auto lookup = [&](const std::string& id) -> const Vec& {
    const auto it = embeddings.find(id);
    if (it == embeddings.end()) fail("lookup", "no embedding for utterance " + id);
    return it->second;
  };
  std::vector<ScoredTrial> out;
  out.reserve(trials.size());
  for (const auto& t : trials) {
    ScoredTrial s;
    s.trial = t;
    s.score = cosine(lookup(t.enroll_id), lookup(t.test_id));
    out.push_back(std::move(s));
  }
  return out;
}

std::pair<double, double> compute_eer(std::span<const double> target_scores,
                                      std::span<const double> nontarget_scores) {
  if (target_scores.empty() || nontarget_scores.empty())
    fail("degenerate", "compute_eer: need at least one target and one nontarget trial");

  std::vector<double> targets(target_scores.begin(), target_scores.end());
  std::vector<double> nontargets(nontarget_scores.begin(), nontarget_scores.end());
  std::sort(targets.begin(), targets.end());
  std::sort(nontargets.begin(), nontargets.end());

  std::vector<double> thresholds = targets;
  thresholds.insert(thresholds.end(), nontargets.begin(), nontargets.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  const double nt = static_cast<double>(targets.size());
  const double nn = static_cast<double>(nontargets.size());
  struct Point {
    double thr, far, frr;
  };
  std::vector<Point> points;
  points.reserve(thresholds.size() + 1);
  for (const double t : thresholds) {
    const auto n_below_t =
        std::lower_bound(targets.begin(), targets.end(), t) - targets.begin();
    const auto n_ge_n =
        nontargets.end() - std::lower_bound(nontargets.begin(), nontargets.end(), t);
    points.push_back({t, static_cast<double>(n_ge_n) / nn,
                      static_cast<double>(n_below_t) / nt});
  }
  // Virtual operating point above every score: reject all.
  points.push_back({thresholds.back() + 1.0, 0.0, 1.0});

  // FAR - FRR is non-increasing along the sweep and starts at +1 (the
  // lowest threshold accepts everything); find the sign change.
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const double d0 = points[i].far - points[i].frr;
    const double d1 = points[i + 1].far - points[i + 1].frr;
    if (d1 > 0.0) continue;
    const double lambda = (d0 - d1) == 0.0 ? 0.0 : d0 / (d0 - d1);
    const double eer = points[i].far + lambda * (points[i + 1].far - points[i].far);
    const double thr = points[i].thr + lambda * (points[i + 1].thr - points[i].thr);
    return {eer, thr};
  }
  // Unreachable: the virtual end point has FAR - FRR = -1.
  fail("eval", "compute_eer: no crossing found");
}

std::pair<double, double> compute_eer(const std::vector<ScoredTrial>& scored) {
  std::vector<double> targets, nontargets;
  for (const auto& s : scored) (s.trial.target ? targets : nontargets).push_back(s.score);
  return compute_eer(targets, nontargets);
}

EvalReport per_method_report(const std::vector<ScoredTrial>& scored,
                             const CorpusManifest& manifest) {
  std::map<std::string, int> method_of;
  for (const auto& u : manifest.utterances) method_of[u.utt_id] = u.method_id;

  EvalReport report;
  std::map<int, std::vector<const ScoredTrial*>> buckets;
  for (const auto& s : scored) {
    const auto it = method_of.find(s.trial.test_id);
    if (it == method_of.end())
      fail("lookup", "test utterance not in manifest: " + s.trial.test_id);
    buckets[it->second].push_back(&s);
    s.trial.target ? ++report.n_target : ++report.n_nontarget;
  }
  std::tie(report.overall_eer, report.overall_threshold) = compute_eer(scored);

  for (const auto& [method_id, trials] : buckets) {
    MethodBucket b;
    b.method_id = method_id;
    const auto tier = manifest.method_first_split.find(method_id);
    if (tier == manifest.method_first_split.end())
      fail("lookup", "method " + std::to_string(method_id) + " not in manifest");
    b.tier = tier->second;
    std::vector<double> targets, nontargets;
    for (const auto* s : trials)
      (s->trial.target ? targets : nontargets).push_back(s->score);
    b.n_target = static_cast<int>(targets.size());
    b.n_nontarget = static_cast<int>(nontargets.size());
    // Too few trials of either class: absent, not zero.
    if (b.n_target < 2 || b.n_nontarget < 2) continue;
    std::tie(b.eer, b.threshold) = compute_eer(targets, nontargets);
    report.buckets.push_back(b);
  }
  std::sort(report.buckets.begin(), report.buckets.end(),
            [](const MethodBucket& a, const MethodBucket& b) {
              if (a.tier != b.tier) return static_cast<int>(a.tier) < static_cast<int>(b.tier);
              return a.method_id < b.method_id;
            });
  return report;
}

void write_scores(const std::vector<ScoredTrial>& scored,
                  const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  char buf[64];
  for (const auto& s : scored) {
    std::snprintf(buf, sizeof(buf), "%.6f", s.score);
    out << s.trial.enroll_id << ' ' << s.trial.test_id << ' ' << buf << '\n';
  }
}

std::string format_report(const EvalReport& report) {
  std::string out;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "overall eer=%.3f thr=%.6f\n",
                100.0 * report.overall_eer, report.overall_threshold);
  out += buf;
  for (const auto& b : report.buckets) {
    std::snprintf(buf, sizeof(buf), "method %d eer=%.3f n_target=%d n_nontarget=%d\n",
                  b.method_id, 100.0 * b.eer, b.n_target, b.n_nontarget);
    out += buf;
  }
  return out;
}

void write_report(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << format_report(report);
}

}  // namespace sstrace
