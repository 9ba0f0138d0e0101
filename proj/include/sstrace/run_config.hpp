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
#include <string>

#include "sstrace/corpus.hpp"
#include "sstrace/losses.hpp"
#include "sstrace/model.hpp"
#include "sstrace/pipeline.hpp"

namespace sstrace {

// Every knob of an experiment, parsed from flat `key = value` text with `#`
// comments. Unknown keys are rejected; all defaults are documented by
// echoing the full canonical config next to each run's outputs.
struct RunConfig {
  CorpusConfig corpus;
  int trial_pairs = 3000;  // per class, per split
  std::uint64_t corpus_seed = 42;

  int hidden_dim = 64;
  int attn_dim = 32;
  int embed_dim = 32;

  AAMConfig aam;
  ContrastiveConfig contrastive;

  int phase1_epochs = 30;
  int phase2_epochs = 20;
  int phase3_epochs = 20;
  double phase1_lr = 0.05;
  double phase2_lr = 0.02;
  double phase3_lr = 0.01;
  int batch_size = 32;
  std::uint64_t train_seed = 1;

  ModelDims model_dims() const;  // classes left 0, filled from the corpus
  PhasePlan plan(Phase phase) const;
  void validate() const;

  // Canonical `key = value` listing of every knob.
  std::string echo() const;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace sstrace
