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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sstrace/corpus.hpp"
#include "sstrace/losses.hpp"
#include "sstrace/model.hpp"
#include "sstrace/rng.hpp"

namespace sstrace {

enum class Phase { I = 1, II = 2, III = 3 };

std::string_view phase_tag(Phase p);     // "I", "II", "III"
Phase parse_phase_tag(std::string_view tag);

enum class DataSelection { source_only, converted_and_source, converted_only };
enum class LossSelection { aam, aam_plus_contrastive };

// One training phase. Data and loss selection are functions of the phase,
// matching the three-stage procedure exactly.
struct PhasePlan {
  Phase phase = Phase::I;
  int epochs = 0;  // 0 is a valid no-op pass (useful for initialization audits)
  int batch_size = 32;
  double learning_rate = 0.0;

  DataSelection data_selection() const;
  LossSelection loss_selection() const;
  void validate() const;
};

struct Checkpoint {
  ExtractorParams params;
  Phase phase = Phase::I;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct EpochStats {
  int epoch = 0;     // 1-based
  double loss = 0.0; // mean combined loss over the epoch's items
  double aam = 0.0;
  double con = 0.0;
  bool has_con = false;
};

// Run log line: `phase=<p> epoch=<e> loss=<mean> aam=<mean> con=<mean|-> lr=<lr>`.
std::string format_epoch_line(Phase phase, const EpochStats& stats, double lr);

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochStats> epochs;
  std::vector<double> step_losses;  // mean batch loss per optimizer step
};

// Frozen source-speech embeddings keyed by source speaker; positives and
// negatives for the contrastive phase are drawn from here and never updated.
struct SourceEmbeddingBank {
  std::map<std::string, std::vector<Embedding>> by_speaker;
  Phase built_from = Phase::I;

  std::vector<std::string> speakers() const;  // sorted
  bool has(const std::string& speaker_id) const;
};

// Class indices for the AAM head: sorted train source speakers.
std::map<std::string, int> speaker_classes(const CorpusManifest& manifest);

// (utt_id, class) pairs a phase trains on, in the fixed training order;
// converted utterances always carry their source speaker's class.
std::vector<std::pair<std::string, int>> training_labels(const Corpus& corpus,
                                                         DataSelection selection);

// Plain gradient step: params <- params - learning_rate * grads.
void sgd_step(Mat& params, const Mat& grads, double learning_rate);

// Phase I: AAM over unconverted train utterances labeled by source speaker.
TrainResult train_phase1(const Corpus& corpus, const ModelDims& dims,
                         const PhasePlan& plan, const AAMConfig& aam_cfg,
                         std::uint64_t seed);

// Phase II: AAM fine-tune over converted + source utterances; converted
// utterances carry the label of their *source* speaker.
TrainResult train_phase2(const Corpus& corpus, const Checkpoint& phase1,
                         const PhasePlan& plan, const AAMConfig& aam_cfg,
                         std::uint64_t seed);

// Embeddings of every unconverted train utterance under the phase I model,
// grouped by source speaker. Pure function of (corpus, checkpoint).
SourceEmbeddingBank build_embedding_bank(const Corpus& corpus, const Checkpoint& phase1);

// Positive plus K negatives for one converted utterance. The positive is
// the bank embedding of the exact source utterance when present, otherwise
// a uniform draw from the source speaker's list; the negatives come from K
// distinct other speakers, uniform without replacement.
std::pair<Embedding, std::vector<Embedding>> sample_contrastive_set(
    const SourceEmbeddingBank& bank, const std::string& source_spk, int k, Rng& rng,
    const std::optional<std::string>& source_utt = std::nullopt);

// Phase III: converted utterances only; loss = AAM + alpha * contrastive
// against the frozen bank. `compute_contrastive = false` skips the
// contrastive term entirely (diagnostic path for the alpha = 0 endpoint).
TrainResult train_phase3(const Corpus& corpus, const Checkpoint& phase2,
                         const SourceEmbeddingBank& bank, const PhasePlan& plan,
                         const AAMConfig& aam_cfg, const ContrastiveConfig& con_cfg,
                         std::uint64_t seed, bool compute_contrastive = true);

// Embeddings for a set of utterances under one checkpoint.
std::map<std::string, Vec> extract_embeddings(const Corpus& corpus,
                                              const ExtractorParams& params,
                                              const std::vector<std::string>& utt_ids);

}  // namespace sstrace
