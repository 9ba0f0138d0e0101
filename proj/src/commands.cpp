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

#include "sstrace/commands.hpp"

#include <algorithm>
#include <ostream>
#include <set>

#include "sstrace/error.hpp"
#include "sstrace/eval.hpp"
#include "sstrace/text_io.hpp"

namespace sstrace {

namespace {

std::filesystem::path ckpt_path(const std::filesystem::path& out_dir, int phase) {
  return out_dir / ("phase" + std::to_string(phase) + ".ckpt");
}

void echo_config(const RunConfig& config, const std::filesystem::path& out_dir) {
  std::ofstream out = open_out(out_dir / "config.echo");
  out << config.echo();
}

}  // namespace

void cmd_generate(const RunConfig& config, const std::filesystem::path& out_dir) {
  config.validate();
  std::filesystem::create_directories(out_dir);
  const Corpus corpus = generate_corpus(config.corpus, config.corpus_seed);
  write_corpus(corpus, out_dir);
  for (const Split split : {Split::dev, Split::test}) {
    const auto trials =
        split_trials(corpus.manifest, split, config.trial_pairs, config.corpus_seed);
    write_trials(out_dir / ("trials_" + std::string(split_name(split)) + ".txt"),
                 trials);
  }
  echo_config(config, out_dir);
}

void cmd_train(const RunConfig& config, const std::filesystem::path& corpus_dir,
               const std::filesystem::path& out_dir, const std::set<int>& phases) {
  config.validate();
  if (phases.empty()) fail("config", "no phases requested");
  for (const int p : phases)
    if (p < 1 || p > 3) fail("config", "phase out of range: " + std::to_string(p));
  // Contiguous set, and every earlier phase is either requested now or
  // already checkpointed in out_dir.
  if (*phases.rbegin() - *phases.begin() + 1 != static_cast<int>(phases.size()))
    fail("config", "phases must be contiguous");
  std::filesystem::create_directories(out_dir);
  for (int p = 1; p < *phases.begin(); ++p) {
    if (!std::filesystem::exists(ckpt_path(out_dir, p)))
      fail("dependency", "phase " + std::to_string(*phases.begin()) +
                             " needs the phase " + std::to_string(p) +
                             " checkpoint (" + ckpt_path(out_dir, p).string() +
                             " is missing)");
  }

  const Corpus corpus = load_corpus(corpus_dir, {Split::train});
  echo_config(config, out_dir);
  std::ofstream log = open_out(out_dir / "train.log");

  // Each phase starts from the checkpoint as saved on disk, so running
  // phases one per invocation matches running them together byte for byte.
  const auto run_phase = [&](int phase) {
    TrainResult result;
    switch (phase) {
      case 1:
        result = train_phase1(corpus, config.model_dims(), config.plan(Phase::I),
                              config.aam, config.train_seed);
        break;
      case 2: {
        const Checkpoint phase1 = load_checkpoint(ckpt_path(out_dir, 1));
        result = train_phase2(corpus, phase1, config.plan(Phase::II), config.aam,
                              config.train_seed);
        break;
      }
      case 3: {
        const Checkpoint phase1 = load_checkpoint(ckpt_path(out_dir, 1));
        const Checkpoint phase2 = load_checkpoint(ckpt_path(out_dir, 2));
        const SourceEmbeddingBank bank = build_embedding_bank(corpus, phase1);
        result = train_phase3(corpus, phase2, bank, config.plan(Phase::III),
                              config.aam, config.contrastive, config.train_seed);
        break;
      }
      default:
        fail("config", "phase out of range");
    }
    const double lr = config.plan(result.checkpoint.phase).learning_rate;
    for (const auto& stats : result.epochs)
      log << format_epoch_line(result.checkpoint.phase, stats, lr) << '\n';
    log.flush();
    save_checkpoint(result.checkpoint, ckpt_path(out_dir, phase));
  };
  for (const int phase : phases) run_phase(phase);
}

void cmd_evaluate(const std::filesystem::path& checkpoint_path,
                  const std::filesystem::path& corpus_dir,
                  const std::filesystem::path& trials_path,
                  const std::filesystem::path& out_dir, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  const std::vector<Trial> trials = read_trials(trials_path);
  if (trials.empty()) fail("trial", "empty trial file: " + trials_path.string());

  // Load only the splits the trial utterances live in.
  Corpus corpus;
  corpus.manifest = read_manifest(corpus_dir / "manifest.tsv");
  std::map<std::string, Split> split_of;
  for (const auto& u : corpus.manifest.utterances) split_of[u.utt_id] = u.split;
  std::set<Split> needed;
  std::vector<std::string> utt_ids;
  for (const auto& t : trials) {
    for (const auto& id : {t.enroll_id, t.test_id}) {
      const auto it = split_of.find(id);
      if (it == split_of.end()) fail("lookup", "trial utterance not in manifest: " + id);
      needed.insert(it->second);
      utt_ids.push_back(id);
    }
  }
  for (const Split s : needed)
    read_features_into(corpus,
                       corpus_dir / ("features_" + std::string(split_name(s)) + ".txt"));

  std::filesystem::create_directories(out_dir);
  const auto embeddings = extract_embeddings(corpus, ckpt.params, utt_ids);
  write_embeddings(embeddings, out_dir / "embeddings.txt");

  const auto scored = score_trials(trials, embeddings);
  write_scores(scored, out_dir / "scores.txt");

  const EvalReport report = per_method_report(scored, corpus.manifest);
  write_report(report, out_dir / "report.txt");
  char line[64];
  std::snprintf(line, sizeof(line), "overall eer=%.3f thr=%.6f",
                100.0 * report.overall_eer, report.overall_threshold);
  out << line << '\n';
}

}  // namespace sstrace
