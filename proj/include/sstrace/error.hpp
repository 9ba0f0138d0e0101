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

#include <stdexcept>
#include <string>
#include <utility>

namespace sstrace {

// Error carries a short machine-parsable class ("shape", "config", ...)
// next to the human-readable message. The CLI prints the class on exit.
class Error : public std::runtime_error {
 public:
  Error(std::string cls, const std::string& msg)
      : std::runtime_error(msg), cls_(std::move(cls)) {}

  const std::string& cls() const noexcept { return cls_; }

 private:
  std::string cls_;
};

[[noreturn]] inline void fail(std::string cls, const std::string& msg) {
  throw Error(std::move(cls), msg);
}

}  // namespace sstrace
