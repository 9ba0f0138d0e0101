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

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sstrace/trial.hpp"
#include "sstrace/types.hpp"

namespace sstrace {

enum class Split { train, dev, test };

std::string_view split_name(Split s);
Split parse_split(std::string_view name);

// Knobs of the synthetic converted-speech corpus. Defaults give stable EER
// estimates in seconds-scale runs.
struct CorpusConfig {
  int style_dim = 8;   // latent speaker style dimension
  int feat_dim = 20;   // frame feature dimension
  int frames_min = 30;
  int frames_max = 80;

  int train_speakers = 40;
  int train_utts_per_speaker = 30;
  int conversions_per_utt = 1;  // conversions derived from each train source utterance
  int dev_speakers = 10;
  int test_speakers = 10;
  int eval_utts_per_speaker = 30;  // converted utterances per dev/test source speaker
  int target_speakers = 100;

  int train_methods = 8;
  int dev_extra_methods = 4;   // methods unseen in train
  int test_extra_methods = 4;  // methods unseen in train and dev

  double leak_min = 0.15;  // source-style residual range across methods
  double leak_max = 0.6;
  double method_deviation = 0.35;   // per-method distortion of the shared leak basis
  double target_style_scale = 0.3;  // magnitude of the injected target style
  double source_mix_scale = 1.0;    // magnitude of a speaker's own style in raw speech
  double content_scale = 0.03;      // random-walk step of the content trajectory
  double noise_scale = 0.05;        // white-noise floor

  // Diagnostics-only escape hatch: permits leak_strength == 0, which the
  // normal constructor rejects because it makes source tracing impossible.
  bool unchecked_zero_leak = false;

  void validate() const;  // throws "config" on bad values
};

struct SpeakerProfile {
  std::string speaker_id;
  Vec style;  // drawn once per speaker, fixed thereafter
};

// A parametric conversion: projects target style in, leaks a residual of
// source style through. leak_strength == 0 is rejected because a zero-leak
// method destroys all source information.
struct ConversionMethod {
  int method_id = 0;
  Mat mix;   // feat_dim x style_dim, target-style projection
  Mat leak;  // feat_dim x style_dim, source-style projection
  double leak_strength = 0.0;
  double noise_scale = 0.0;

  static ConversionMethod make(int method_id, Mat mix, Mat leak, double leak_strength,
                               double noise_scale);
  // Test-only: bypasses the leak_strength > 0 invariant.
  static ConversionMethod make_unchecked(int method_id, Mat mix, Mat leak,
                                         double leak_strength, double noise_scale);
};

struct UtteranceMeta {
  std::string utt_id;
  std::string source_speaker;
  std::string target_speaker;  // empty for unconverted speech
  int method_id = 0;           // 0 iff unconverted
  Split split = Split::train;
  int n_frames = 0;

  bool converted() const { return method_id != 0; }
};

// Converted utterance ids embed their provenance:
//   <source_utt_id>_m<method:02d>_<target_speaker>
// This recovers the exact source utterance a conversion came from.
std::string source_utt_of(const std::string& converted_utt_id);

struct CorpusManifest {
  std::uint64_t seed = 0;
  int style_dim = 0;
  int feat_dim = 0;
  std::vector<SpeakerProfile> speakers;     // generation-side only (empty when loaded)
  std::vector<ConversionMethod> methods;    // generation-side only (empty when loaded)
  std::vector<UtteranceMeta> utterances;
  std::map<int, Split> method_first_split;  // availability tier per method id

  // Methods available to a split; tiers nest train < dev < test.
  std::vector<int> methods_available(Split s) const;
  std::vector<std::string> source_speakers(Split s) const;  // sorted unique
  const UtteranceMeta& find_utterance(const std::string& utt_id) const;
};

struct Corpus {
  CorpusManifest manifest;
  std::map<std::string, Mat> features;  // utt_id -> n_frames x feat_dim
};

// Deterministic for fixed (config, seed): every RNG stream is keyed by the
// seed plus a structural tag, so the same call yields byte-identical output.
Corpus generate_corpus(const CorpusConfig& config, std::uint64_t seed);

// Balanced target/nontarget trials among the converted utterances of a
// split. A trial is target iff both utterances share a source speaker.
// Same-method and cross-method pairs are both represented in each class.
std::vector<Trial> split_trials(const CorpusManifest& manifest, Split split,
                                int pairs_per_condition, std::uint64_t seed);

// Manifest file: header line then one tab-separated record per utterance.
void write_manifest(const CorpusManifest& manifest, const std::filesystem::path& path);
CorpusManifest read_manifest(const std::filesystem::path& path);

// Feature file: repeated `utt <id> <T> <F>` headers followed by T frame lines.
void write_features(const Corpus& corpus, Split split, const std::filesystem::path& path);
void read_features_into(Corpus& corpus, const std::filesystem::path& path);

// Directory layout: manifest.tsv + features_<split>.txt per split.
void write_corpus(const Corpus& corpus, const std::filesystem::path& dir);
Corpus load_corpus(const std::filesystem::path& dir, const std::set<Split>& splits);

}  // namespace sstrace
