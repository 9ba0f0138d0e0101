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
#include <string>
#include <vector>

namespace sstrace {

// A verification trial: target when both utterances share a source speaker.
struct Trial {
  bool target = false;
  std::string enroll_id;
  std::string test_id;
};

// One trial per line: `target|nontarget <enroll_utt_id> <test_utt_id>`.
void write_trials(const std::filesystem::path& path, const std::vector<Trial>& trials);
std::vector<Trial> read_trials(const std::filesystem::path& path);

}  // namespace sstrace
