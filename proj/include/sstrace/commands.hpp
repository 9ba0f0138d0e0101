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
#include <iosfwd>
#include <set>
#include <string>

#include "sstrace/run_config.hpp"

namespace sstrace {

// Writes manifest, per-split feature files, dev/test trial files, and the
// echoed config into out_dir. Byte-identical on rerun.
void cmd_generate(const RunConfig& config, const std::filesystem::path& out_dir);

// Runs the requested phases in order against the corpus directory. Phases
// must be contiguous and each later phase finds its prerequisite checkpoint
// in out_dir (phase<k>.ckpt). Appends one run-log line per epoch to
// out_dir/train.log (truncated at the start of each invocation).
void cmd_train(const RunConfig& config, const std::filesystem::path& corpus_dir,
               const std::filesystem::path& out_dir, const std::set<int>& phases);

// Scores a trial file under one checkpoint: writes embeddings.txt,
// scores.txt, report.txt into out_dir and prints the overall line to `out`.
void cmd_evaluate(const std::filesystem::path& checkpoint_path,
                  const std::filesystem::path& corpus_dir,
                  const std::filesystem::path& trials_path,
                  const std::filesystem::path& out_dir, std::ostream& out);

}  // namespace sstrace
