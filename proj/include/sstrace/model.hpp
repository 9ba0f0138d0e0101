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
#include <string>
#include <vector>

#include "sstrace/autodiff.hpp"
#include "sstrace/types.hpp"

namespace sstrace {

struct Embedding {
  std::string utt_id;
  Vec values;
};

struct ModelDims {
  int feat = 20;    // F: frame feature dimension
  int hidden = 64;  // H: encoder width
  int attn = 32;    // A: attention width
  int embed = 32;   // D: embedding dimension
  int classes = 0;  // C: speaker classes of the AAM head
};

// Parameters of the embedding extractor: per-frame encoder (two affine+tanh
// layers), attentive statistics pooling, embedding projection, speaker head.
// Weights are stored input x output so the forward pass never transposes.
// The method head slot is reserved but unused by every operation.
struct ExtractorParams {
  ModelDims dims;
  Mat enc1_w, enc1_b;          // F x H, 1 x H
  Mat enc2_w, enc2_b;          // H x H, 1 x H
  Mat pool_w, pool_b, pool_v;  // H x A, 1 x A, A x 1
  Mat emb_w, emb_b;            // 2H x D, 1 x D
  Mat head_w;                  // C x D, one row per speaker class
  std::optional<Mat> method_head_w;

  // Seeded uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) per layer.
  static ExtractorParams init(const ModelDims& dims, std::uint64_t seed);

  std::vector<std::pair<std::string, Mat*>> tensors();
  std::vector<std::pair<std::string, const Mat*>> tensors() const;
  long long parameter_count() const;
  void check_shapes() const;  // throws "shape" on any inconsistency
};

// Parameter tensors staged on a tape; trainable controls leaf kind.
struct StagedParams {
  ad::Value enc1_w, enc1_b, enc2_w, enc2_b;
  ad::Value pool_w, pool_b, pool_v;
  ad::Value emb_w, emb_b;
  ad::Value head_w;
};

StagedParams stage(ad::Tape& tape, const ExtractorParams& params, bool trainable);

// Per-frame affine -> tanh -> affine -> tanh; no cross-frame mixing.
// features is T x F, result T x H.
ad::Value encode_frames(ad::Tape& tape, const ad::Value& features, const StagedParams& p);

// Attention-weighted mean and standard deviation over frames, concatenated
// to a 1 x 2H row. sigma_j = sqrt(max(E[h_j^2] - mu_j^2, 1e-9)).
ad::Value attentive_stats_pool(ad::Tape& tape, const ad::Value& hidden,
                               const StagedParams& p);

// Full extractor: 1 x D row. Not length-normalized; losses and scoring
// normalize where they need to.
ad::Value extract_embedding_t(ad::Tape& tape, const ad::Value& features,
                              const StagedParams& p);

// Plain (no-gradient) wrapper around the tape forward pass.
Vec extract_embedding(const Mat& features, const ExtractorParams& params);

// Checkpoint file: `#source-trace-ckpt v1`, dims line, phase tag line, then
// one line per tensor (name, rows, cols, values at 9 significant digits).
void write_checkpoint(const ExtractorParams& params, const std::string& phase_tag,
                      const std::filesystem::path& path);
std::pair<ExtractorParams, std::string> read_checkpoint(const std::filesystem::path& path);

// Embedding file: `<utt_id> <v1> ... <vD>` per line, 9 significant digits.
void write_embeddings(const std::map<std::string, Vec>& embeddings,
                      const std::filesystem::path& path);
std::map<std::string, Vec> read_embeddings(const std::filesystem::path& path);

}  // namespace sstrace
