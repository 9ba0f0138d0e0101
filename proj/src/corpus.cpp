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

#include "sstrace/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <utility>

#include "sstrace/error.hpp"
#include "sstrace/rng.hpp"
#include "sstrace/text_io.hpp"

namespace sstrace {

namespace {

constexpr std::string_view kManifestMagic = "#source-trace-manifest v1";

std::string pad_int(int v, int width) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%0*d", width, v);
  return buf;
}

Vec random_vec(Rng& rng, int n, double scale = 1.0) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = scale * rng.normal();
  return v;
}

Mat random_projection(Rng& rng, int rows, int cols, double gain = 1.0) {
  Mat m(rows, cols);
  const double scale = gain / std::sqrt(static_cast<double>(cols));
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = scale * rng.normal();
  return m;
}

// Random walk smoothed with a 3-frame centered moving average; edges use the
// frames that exist.
Mat content_trajectory(Rng& rng, int n_frames, int feat_dim, double step) {
  Mat walk(n_frames, feat_dim);
  walk.row(0) = random_vec(rng, feat_dim, step).transpose();
  for (int t = 1; t < n_frames; ++t)
    walk.row(t) = walk.row(t - 1) + random_vec(rng, feat_dim, step).transpose();
  Mat smooth(n_frames, feat_dim);
  for (int t = 0; t < n_frames; ++t) {
    const int lo = std::max(0, t - 1);
    const int hi = std::min(n_frames - 1, t + 1);
    smooth.row(t) = walk.middleRows(lo, hi - lo + 1).colwise().mean();
  }
  return smooth;
}

// features[t] = style + content[t] + noise, with style constant per utterance.
Mat render_utterance(Rng& rng, int n_frames, const Vec& style, double content_scale,
                     double noise_scale) {
  const int feat_dim = static_cast<int>(style.size());
  Mat features = content_trajectory(rng, n_frames, feat_dim, content_scale);
  features.rowwise() += style.transpose();
  if (noise_scale > 0.0) {
    for (int t = 0; t < n_frames; ++t)
      features.row(t) += random_vec(rng, feat_dim, noise_scale).transpose();
  }
  return features;
}

struct GenState {
  const CorpusConfig& config;
  std::uint64_t seed;
  Corpus corpus;
  Mat leak_basis;     // shared source-leak projection across methods
  Mat identity_mix;   // projection used for unconverted speech
  std::map<std::string, const SpeakerProfile*> speaker_by_id;
};

const SpeakerProfile& speaker(const GenState& g, const std::string& id) {
  return *g.speaker_by_id.at(id);
}

void add_utterance(GenState& g, UtteranceMeta meta, Mat features) {
  if (!all_finite(features))
    fail("data", "generated non-finite features for " + meta.utt_id);
  g.corpus.features.emplace(meta.utt_id, std::move(features));
  g.corpus.manifest.utterances.push_back(std::move(meta));
}

void add_source_utterance(GenState& g, const SpeakerProfile& spk, int index, Split split) {
  UtteranceMeta meta;
  meta.utt_id = spk.speaker_id + "u" + pad_int(index, 3);
  meta.source_speaker = spk.speaker_id;
  meta.method_id = 0;
  meta.split = split;
  Rng rng = Rng::derive(g.seed, "utt:" + meta.utt_id);
  meta.n_frames = g.config.frames_min +
                  static_cast<int>(rng.below(static_cast<std::uint64_t>(
                      g.config.frames_max - g.config.frames_min + 1)));
  // Unconverted speech: identity target, full leak of the speaker's own style.
  const Vec style = g.identity_mix * spk.style + g.leak_basis * spk.style;
  Mat features = render_utterance(rng, meta.n_frames, style, g.config.content_scale,
                                  g.config.noise_scale);
  add_utterance(g, std::move(meta), std::move(features));
}

void add_converted_utterance(GenState& g, const std::string& source_utt_id,
                             const SpeakerProfile& src, const SpeakerProfile& tgt,
                             const ConversionMethod& method, Split split) {
  UtteranceMeta meta;
  meta.utt_id = source_utt_id + "_m" + pad_int(method.method_id, 2) + "_" + tgt.speaker_id;
  meta.source_speaker = src.speaker_id;
  meta.target_speaker = tgt.speaker_id;
  meta.method_id = method.method_id;
  meta.split = split;
  Rng rng = Rng::derive(g.seed, "utt:" + meta.utt_id);
  meta.n_frames = g.config.frames_min +
                  static_cast<int>(rng.below(static_cast<std::uint64_t>(
                      g.config.frames_max - g.config.frames_min + 1)));
  const Vec style =
      method.mix * tgt.style + method.leak_strength * (method.leak * src.style);
  Mat features = render_utterance(rng, meta.n_frames, style, g.config.content_scale,
                                  method.noise_scale);
  add_utterance(g, std::move(meta), std::move(features));
}

// Per-speaker method plan: the split's available methods repeated to cover
// `count` slots, then shuffled. The rotation offset varies by speaker so all
// methods get coverage even when count < available.size().
std::vector<int> method_plan(const std::vector<int>& available, int count, int offset,
                             Rng& rng) {
  std::vector<int> plan;
  plan.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    plan.push_back(available[static_cast<std::size_t>(i + offset) % available.size()]);
  rng.shuffle(plan);
  return plan;
}

}  // namespace

std::string_view split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  fail("config", "unknown split");
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "dev") return Split::dev;
  if (name == "test") return Split::test;
  fail("config", "unknown split name: " + std::string(name));
}

void CorpusConfig::validate() const {
  const auto positive = [](int v, const char* name) {
    if (v <= 0) fail("config", std::string(name) + " must be positive");
  };
  positive(style_dim, "style_dim");
  positive(feat_dim, "feat_dim");
  positive(frames_min, "frames_min");
  positive(train_speakers, "train_speakers");
  positive(train_utts_per_speaker, "train_utts_per_speaker");
  positive(conversions_per_utt, "conversions_per_utt");
  positive(dev_speakers, "dev_speakers");
  positive(test_speakers, "test_speakers");
  positive(eval_utts_per_speaker, "eval_utts_per_speaker");
  positive(target_speakers, "target_speakers");
  positive(train_methods, "train_methods");
  if (dev_extra_methods < 0 || test_extra_methods < 0)
    fail("config", "extra method counts must be non-negative");
  if (frames_max < frames_min) fail("config", "frames_max < frames_min");
  if (!unchecked_zero_leak && leak_min <= 0.0)
    fail("config", "leak_min must be strictly positive");
  if (leak_min < 0.0 || leak_max < leak_min || leak_max > 1.0)
    fail("config", "leak range must satisfy 0 <= leak_min <= leak_max <= 1");
  if (method_deviation < 0.0) fail("config", "method_deviation must be >= 0");
  if (target_style_scale < 0.0) fail("config", "target_style_scale must be >= 0");
  if (source_mix_scale < 0.0) fail("config", "source_mix_scale must be >= 0");
  if (content_scale < 0.0) fail("config", "content_scale must be >= 0");
  if (noise_scale < 0.0) fail("config", "noise_scale must be >= 0");
}

ConversionMethod ConversionMethod::make(int method_id, Mat mix, Mat leak,
                                        double leak_strength, double noise_scale) {
  if (method_id < 1) fail("config", "method_id must be >= 1");
  if (leak_strength <= 0.0)
    fail("config", "conversion method " + std::to_string(method_id) +
                       ": leak_strength must be strictly positive");
  return make_unchecked(method_id, std::move(mix), std::move(leak), leak_strength,
                        noise_scale);
}

ConversionMethod ConversionMethod::make_unchecked(int method_id, Mat mix, Mat leak,
                                                  double leak_strength,
                                                  double noise_scale) {
  ConversionMethod m;
  m.method_id = method_id;
  m.mix = std::move(mix);
  m.leak = std::move(leak);
  m.leak_strength = leak_strength;
  m.noise_scale = noise_scale;
  return m;
}

std::string source_utt_of(const std::string& converted_utt_id) {
  const std::size_t pos = converted_utt_id.find("_m");
  if (pos == std::string::npos)
    fail("lookup", "not a converted utterance id: " + converted_utt_id);
  return converted_utt_id.substr(0, pos);
}

std::vector<int> CorpusManifest::methods_available(Split s) const {
  std::vector<int> out;
  for (const auto& [id, first] : method_first_split)
    if (static_cast<int>(first) <= static_cast<int>(s)) out.push_back(id);
  return out;
}

std::vector<std::string> CorpusManifest::source_speakers(Split s) const {
  std::set<std::string> uniq;
  for (const auto& u : utterances)
    if (u.split == s) uniq.insert(u.source_speaker);
  return {uniq.begin(), uniq.end()};
}

const UtteranceMeta& CorpusManifest::find_utterance(const std::string& utt_id) const {
  for (const auto& u : utterances)
    if (u.utt_id == utt_id) return u;
  fail("lookup", "unknown utterance id: " + utt_id);
}

Corpus generate_corpus(const CorpusConfig& config, std::uint64_t seed) {
  config.validate();

  GenState g{config, seed, {}, {}, {}, {}};
  CorpusManifest& manifest = g.corpus.manifest;
  manifest.seed = seed;
  manifest.style_dim = config.style_dim;
  manifest.feat_dim = config.feat_dim;

  // Speakers. Sources are numbered across splits; targets form their own pool.
  const int total_sources =
      config.train_speakers + config.dev_speakers + config.test_speakers;
  for (int i = 0; i < total_sources; ++i) {
    SpeakerProfile p;
    p.speaker_id = "s" + pad_int(i, 3);
    Rng rng = Rng::derive(seed, "speaker:" + p.speaker_id);
    p.style = random_vec(rng, config.style_dim);
    manifest.speakers.push_back(std::move(p));
  }
  for (int i = 0; i < config.target_speakers; ++i) {
    SpeakerProfile p;
    p.speaker_id = "t" + pad_int(i, 3);
    Rng rng = Rng::derive(seed, "speaker:" + p.speaker_id);
    p.style = random_vec(rng, config.style_dim);
    manifest.speakers.push_back(std::move(p));
  }
  for (const auto& p : manifest.speakers) g.speaker_by_id[p.speaker_id] = &p;

  {
    Rng rng = Rng::derive(seed, "leak-basis");
    g.leak_basis = random_projection(rng, config.feat_dim, config.style_dim);
  }
  {
    Rng rng = Rng::derive(seed, "identity-mix");
    g.identity_mix = random_projection(rng, config.feat_dim, config.style_dim,
                                       config.source_mix_scale);
  }

  // Conversion methods: each shares the leak basis up to a per-method
  // deviation, so unseen methods stay related but not identical to seen ones.
  const int total_methods =
      config.train_methods + config.dev_extra_methods + config.test_extra_methods;
  const double dev = config.method_deviation;
  const double renorm = 1.0 / std::sqrt(1.0 + dev * dev);
  // Leak strengths are stratified across [leak_min, leak_max] within each
  // availability tier: every tier spans the same difficulty ladder, and the
  // per-seed average leak stays put instead of wandering with the draw.
  const auto tier_rank = [&](int k) -> std::pair<int, int> {
    if (k <= config.train_methods) return {k - 1, config.train_methods};
    if (k <= config.train_methods + config.dev_extra_methods)
      return {k - 1 - config.train_methods, config.dev_extra_methods};
    return {k - 1 - config.train_methods - config.dev_extra_methods,
            config.test_extra_methods};
  };
  for (int k = 1; k <= total_methods; ++k) {
    Rng rng = Rng::derive(seed, "method:" + std::to_string(k));
    Mat mix = random_projection(rng, config.feat_dim, config.style_dim,
                                config.target_style_scale);
    const Mat perturb = random_projection(rng, config.feat_dim, config.style_dim);
    Mat leak = renorm * (g.leak_basis + dev * perturb);
    const auto [rank, tier_size] = tier_rank(k);
    const double strength =
        tier_size == 1
            ? 0.5 * (config.leak_min + config.leak_max)
            : config.leak_min + (config.leak_max - config.leak_min) *
                                    (static_cast<double>(rank) / (tier_size - 1));
    ConversionMethod method =
        config.unchecked_zero_leak
            ? ConversionMethod::make_unchecked(k, std::move(mix), std::move(leak),
                                               strength, config.noise_scale)
            : ConversionMethod::make(k, std::move(mix), std::move(leak), strength,
                                     config.noise_scale);
    manifest.methods.push_back(std::move(method));
    Split tier = Split::test;
    if (k <= config.train_methods)
      tier = Split::train;
    else if (k <= config.train_methods + config.dev_extra_methods)
      tier = Split::dev;
    manifest.method_first_split[k] = tier;
  }
  const auto method_by_id = [&manifest](int id) -> const ConversionMethod& {
    return manifest.methods[static_cast<std::size_t>(id - 1)];
  };

  const std::vector<std::string> target_ids = [&] {
    std::vector<std::string> ids;
    for (int i = 0; i < config.target_speakers; ++i)
      ids.push_back("t" + pad_int(i, 3));
    return ids;
  }();

  // Train split: source utterances plus conversions derived from each one.
  const std::vector<int> train_avail = manifest.methods_available(Split::train);
  for (int i = 0; i < config.train_speakers; ++i) {
    const SpeakerProfile& spk = manifest.speakers[static_cast<std::size_t>(i)];
    for (int j = 0; j < config.train_utts_per_speaker; ++j)
      add_source_utterance(g, spk, j, Split::train);
    Rng plan_rng = Rng::derive(seed, "convplan:" + spk.speaker_id);
    const std::vector<int> plan = method_plan(
        train_avail, config.train_utts_per_speaker * config.conversions_per_utt, i,
        plan_rng);
    int slot = 0;
    for (int j = 0; j < config.train_utts_per_speaker; ++j) {
      const std::string source_utt = spk.speaker_id + "u" + pad_int(j, 3);
      for (int c = 0; c < config.conversions_per_utt; ++c, ++slot) {
        const auto& tgt = speaker(
            g, target_ids[plan_rng.below(target_ids.size())]);
        add_converted_utterance(g, source_utt, spk, tgt,
                                method_by_id(plan[static_cast<std::size_t>(slot)]),
                                Split::train);
      }
    }
  }

  // Dev/test splits: converted utterances only; their nominal source
  // utterances are never materialized.
  const auto add_eval_split = [&](Split split, int first_speaker, int n_speakers) {
    const std::vector<int> avail = manifest.methods_available(split);
    for (int i = 0; i < n_speakers; ++i) {
      const SpeakerProfile& spk =
          manifest.speakers[static_cast<std::size_t>(first_speaker + i)];
      Rng plan_rng = Rng::derive(seed, "convplan:" + spk.speaker_id);
      const std::vector<int> plan =
          method_plan(avail, config.eval_utts_per_speaker, i, plan_rng);
      for (int j = 0; j < config.eval_utts_per_speaker; ++j) {
        const std::string source_utt = spk.speaker_id + "u" + pad_int(j, 3);
        const auto& tgt = speaker(g, target_ids[plan_rng.below(target_ids.size())]);
        add_converted_utterance(g, source_utt, spk, tgt,
                                method_by_id(plan[static_cast<std::size_t>(j)]), split);
      }
    }
  };
  add_eval_split(Split::dev, config.train_speakers, config.dev_speakers);
  add_eval_split(Split::test, config.train_speakers + config.dev_speakers,
                 config.test_speakers);

  return std::move(g.corpus);
}

namespace {

using IndexPair = std::pair<std::size_t, std::size_t>;

// Draw `want` pairs, preferring an even split between the same-method and
// cross-method pools; shortfall in one pool is backfilled from the other.
std::vector<IndexPair> draw_pairs(std::vector<IndexPair>& same,
                                  std::vector<IndexPair>& cross, int want, Rng& rng) {
  rng.shuffle(same);
  rng.shuffle(cross);
  const std::size_t want_total = static_cast<std::size_t>(want);
  std::size_t take_same = std::min(same.size(), want_total / 2);
  std::size_t take_cross = std::min(cross.size(), want_total - take_same);
  take_same = std::min(same.size(), want_total - take_cross);
  std::vector<IndexPair> out;
  out.reserve(take_same + take_cross);
  out.insert(out.end(), same.begin(), same.begin() + static_cast<std::ptrdiff_t>(take_same));
  out.insert(out.end(), cross.begin(),
             cross.begin() + static_cast<std::ptrdiff_t>(take_cross));
  return out;
}

}  // namespace

std::vector<Trial> split_trials(const CorpusManifest& manifest, Split split,
                                int pairs_per_condition, std::uint64_t seed) {
  if (pairs_per_condition <= 0)
    fail("config", "pairs_per_condition must be positive");

  std::vector<const UtteranceMeta*> utts;
  for (const auto& u : manifest.utterances)
    if (u.split == split && u.converted()) utts.push_back(&u);
  std::sort(utts.begin(), utts.end(),
            [](const auto* a, const auto* b) { return a->utt_id < b->utt_id; });

  std::map<std::string, int> per_speaker;
  for (const auto* u : utts) ++per_speaker[u->source_speaker];
  int speakers_with_two = 0;
  for (const auto& [spk, n] : per_speaker)
    if (n >= 2) ++speakers_with_two;
  if (per_speaker.size() < 2 || speakers_with_two < 2)
    fail("trial", std::string("split ") + std::string(split_name(split)) + " has " +
                      std::to_string(per_speaker.size()) +
                      " source speakers with converted utterances (" +
                      std::to_string(speakers_with_two) +
                      " with >= 2); need at least 2 of each");

  std::vector<IndexPair> target_same, target_cross, nontarget_same, nontarget_cross;
  for (std::size_t a = 0; a < utts.size(); ++a) {
    for (std::size_t b = a + 1; b < utts.size(); ++b) {
      const bool same_speaker = utts[a]->source_speaker == utts[b]->source_speaker;
      const bool same_method = utts[a]->method_id == utts[b]->method_id;
      auto& pool = same_speaker ? (same_method ? target_same : target_cross)
                                : (same_method ? nontarget_same : nontarget_cross);
      pool.emplace_back(a, b);
    }
  }

  Rng rng = Rng::derive(seed, "trials:" + std::string(split_name(split)));
  const std::vector<IndexPair> targets =
      draw_pairs(target_same, target_cross, pairs_per_condition, rng);
  const std::vector<IndexPair> nontargets =
      draw_pairs(nontarget_same, nontarget_cross, pairs_per_condition, rng);

  std::vector<Trial> trials;
  trials.reserve(targets.size() + nontargets.size());
  const auto emit = [&](const std::vector<IndexPair>& pairs, bool label) {
    for (const auto& [a, b] : pairs) {
      Trial t;
      t.target = label;
      const bool flip = rng.below(2) == 1;
      t.enroll_id = utts[flip ? b : a]->utt_id;
      t.test_id = utts[flip ? a : b]->utt_id;
      trials.push_back(std::move(t));
    }
  };
  emit(targets, true);
  emit(nontargets, false);
  rng.shuffle(trials);
  return trials;
}

void write_trials(const std::filesystem::path& path, const std::vector<Trial>& trials) {
  std::ofstream out = open_out(path);
  for (const auto& t : trials) {
    out << (t.target ? "target" : "nontarget") << ' ' << t.enroll_id << ' '
        << t.test_id << '\n';
  }
}

std::vector<Trial> read_trials(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::vector<Trial> trials;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_ws(line);
    if (fields.size() != 3)
      fail("io", "bad trial line (want 3 fields): " + line);
    Trial t;
    if (fields[0] == "target")
      t.target = true;
    else if (fields[0] == "nontarget")
      t.target = false;
    else
      fail("io", "bad trial label: " + fields[0]);
    t.enroll_id = fields[1];
    t.test_id = fields[2];
    trials.push_back(std::move(t));
  }
  return trials;
}

void write_manifest(const CorpusManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << kManifestMagic << " seed=" << manifest.seed << " ds=" << manifest.style_dim
      << " f=" << manifest.feat_dim << '\n';
  for (const auto& u : manifest.utterances) {
    out << u.utt_id << '\t' << u.source_speaker << '\t'
        << (u.target_speaker.empty() ? "-" : u.target_speaker) << '\t' << u.method_id
        << '\t' << split_name(u.split) << '\t' << u.n_frames << '\n';
  }
}

CorpusManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line.rfind(kManifestMagic, 0) != 0)
    fail("io", "not a manifest file: " + path.string());
  CorpusManifest manifest;
  {
    const auto fields = split_ws(line.substr(kManifestMagic.size()));
    for (const auto& f : fields) {
      const auto eq = f.find('=');
      if (eq == std::string::npos) fail("io", "bad manifest header field: " + f);
      const std::string key = f.substr(0, eq);
      const std::string value = f.substr(eq + 1);
      if (key == "seed")
        manifest.seed = std::stoull(value);
      else if (key == "ds")
        manifest.style_dim = std::stoi(value);
      else if (key == "f")
        manifest.feat_dim = std::stoi(value);
      else
        fail("io", "unknown manifest header key: " + key);
    }
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_on(line, '\t');
    if (fields.size() != 6) fail("io", "bad manifest record (want 6 fields): " + line);
    UtteranceMeta u;
    u.utt_id = fields[0];
    u.source_speaker = fields[1];
    u.target_speaker = fields[2] == "-" ? "" : fields[2];
    u.method_id = std::stoi(fields[3]);
    u.split = parse_split(fields[4]);
    u.n_frames = std::stoi(fields[5]);
    if ((u.method_id == 0) != u.target_speaker.empty())
      fail("io", "manifest record violates method/target pairing: " + line);
    manifest.utterances.push_back(std::move(u));
  }
  // Availability tier = earliest split in which a method occurs.
  for (const auto& u : manifest.utterances) {
    if (!u.converted()) continue;
    auto [it, inserted] = manifest.method_first_split.try_emplace(u.method_id, u.split);
    if (!inserted && static_cast<int>(u.split) < static_cast<int>(it->second))
      it->second = u.split;
  }
  return manifest;
}

void write_features(const Corpus& corpus, Split split, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  std::string buf;
  for (const auto& u : corpus.manifest.utterances) {
    if (u.split != split) continue;
    const auto it = corpus.features.find(u.utt_id);
    if (it == corpus.features.end())
      fail("lookup", "missing features for utterance " + u.utt_id);
    const Mat& f = it->second;
    buf.clear();
    buf += "utt ";
    buf += u.utt_id;
    buf += ' ';
    buf += std::to_string(f.rows());
    buf += ' ';
    buf += std::to_string(f.cols());
    buf += '\n';
    for (Eigen::Index t = 0; t < f.rows(); ++t) {
      for (Eigen::Index c = 0; c < f.cols(); ++c) {
        if (c > 0) buf += ' ';
        append_g9(buf, f(t, c));
      }
      buf += '\n';
    }
    out << buf;
  }
}

void read_features_into(Corpus& corpus, const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto header = split_ws(line);
    if (header.size() != 4 || header[0] != "utt")
      fail("io", "bad feature record header: " + line);
    const std::string& utt_id = header[1];
    const int rows = std::stoi(header[2]);
    const int cols = std::stoi(header[3]);
    Mat f(rows, cols);
    for (int t = 0; t < rows; ++t) {
      if (!std::getline(in, line))
        fail("io", "truncated feature record for " + utt_id);
      const char* p = line.c_str();
      char* end = nullptr;
      for (int c = 0; c < cols; ++c) {
        f(t, c) = std::strtod(p, &end);
        if (end == p) fail("io", "bad feature value in record " + utt_id);
        p = end;
      }
    }
    corpus.features[utt_id] = std::move(f);
  }
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_manifest(corpus.manifest, dir / "manifest.tsv");
  for (const Split s : {Split::train, Split::dev, Split::test}) {
    write_features(corpus, s,
                   dir / ("features_" + std::string(split_name(s)) + ".txt"));
  }
}

Corpus load_corpus(const std::filesystem::path& dir, const std::set<Split>& splits) {
  Corpus corpus;
  corpus.manifest = read_manifest(dir / "manifest.tsv");
  for (const Split s : splits)
    read_features_into(corpus,
                       dir / ("features_" + std::string(split_name(s)) + ".txt"));
  return corpus;
}

}  // namespace sstrace
