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

#include <iostream>
#include <set>
#include <string>

#include "CLI11.hpp"
#include "sstrace/commands.hpp"
#include "sstrace/error.hpp"
#include "sstrace/run_config.hpp"
#include "sstrace/text_io.hpp"

namespace {

std::set<int> parse_phases(const std::string& spec) {
  std::set<int> phases;
  for (const auto& tok : sstrace::split_on(spec, ',')) {
    if (tok.size() != 1 || tok[0] < '1' || tok[0] > '3')
      sstrace::fail("config", "bad phase list: " + spec);
    phases.insert(tok[0] - '0');
  }
  return phases;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Source speaker tracing toolkit: synthetic corpus generation, "
               "three-phase extractor training, and EER evaluation."};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string corpus_dir;
  std::string trials_path;
  std::string checkpoint_path;
  std::string phases_spec = "1,2,3";
  std::uint64_t seed = 0;

  auto* generate = app.add_subcommand(
      "generate", "Write a synthetic corpus with trial files into --out");
  generate->add_option("--config", config_path, "key = value config file");
  generate->add_option("--out", out_dir, "output directory")->required();
  auto* gen_seed = generate->add_option("--seed", seed, "override corpus_seed");

  auto* train = app.add_subcommand(
      "train", "Train the requested phases against a generated corpus");
  train->add_option("--config", config_path, "key = value config file");
  train->add_option("--corpus", corpus_dir, "corpus directory")->required();
  train->add_option("--out", out_dir, "run directory for checkpoints and logs")
      ->required();
  train->add_option("--phases", phases_spec, "comma list, e.g. 1,2,3");
  auto* train_seed = train->add_option("--seed", seed, "override train_seed");

  auto* evaluate = app.add_subcommand(
      "evaluate", "Score a trial file under a checkpoint and report EER");
  evaluate->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  evaluate->add_option("--corpus", corpus_dir, "corpus directory")->required();
  evaluate->add_option("--trials", trials_path, "trial file")->required();
  evaluate->add_option("--out", out_dir, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    sstrace::RunConfig config;
    if (!config_path.empty()) config = sstrace::load_run_config(config_path);

    if (generate->parsed()) {
      if (gen_seed->count() > 0) config.corpus_seed = seed;
      sstrace::cmd_generate(config, out_dir);
    } else if (train->parsed()) {
      if (train_seed->count() > 0) config.train_seed = seed;
      sstrace::cmd_train(config, corpus_dir, out_dir, parse_phases(phases_spec));
    } else if (evaluate->parsed()) {
      sstrace::cmd_evaluate(checkpoint_path, corpus_dir, trials_path, out_dir,
                            std::cout);
    }
  } catch (const sstrace::Error& e) {
    std::cerr << "error class=" << e.cls() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error class=internal: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
