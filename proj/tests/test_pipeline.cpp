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

#include <filesystem>

#include "doctest.h"
#include "sstrace/error.hpp"
#include "sstrace/numerics.hpp"
#include "sstrace/pipeline.hpp"
#include "sstrace/text_io.hpp"

using namespace sstrace;
namespace fs = std::filesystem;

namespace {

CorpusConfig tiny_corpus_config() {
  CorpusConfig c;
  c.train_speakers = 8;
  c.train_utts_per_speaker = 4;
  c.dev_speakers = 4;
  c.test_speakers = 3;
  c.eval_utts_per_speaker = 6;
  c.target_speakers = 5;
  c.train_methods = 3;
  c.dev_extra_methods = 2;
  c.test_extra_methods = 2;
  c.frames_min = 8;
  c.frames_max = 16;
  return c;
}

ModelDims tiny_model_dims() {
  ModelDims d;
  d.hidden = 12;
  d.attn = 6;
  d.embed = 8;
  return d;
}

PhasePlan plan_for(Phase phase, int epochs, double lr) {
  PhasePlan p;
  p.phase = phase;
  p.epochs = epochs;
  p.batch_size = 8;
  p.learning_rate = lr;
  return p;
}

bool params_equal(const ExtractorParams& a, const ExtractorParams& b) {
  const auto ta = a.tensors();
  const auto tb = b.tensors();
  if (ta.size() != tb.size()) return false;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (ta[i].first != tb[i].first) return false;
    if (ta[i].second->rows() != tb[i].second->rows() ||
        ta[i].second->cols() != tb[i].second->cols())
      return false;
    if (*ta[i].second != *tb[i].second) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE_BEGIN("pipeline");

TEST_CASE("sgd_step closed forms") {
  Mat w = Mat::Constant(1, 1, 3.0);
  // One step on f(w) = w^2 with lr 0.1: grad 6, w -> 2.4.
  sgd_step(w, Mat::Constant(1, 1, 6.0), 0.1);
  CHECK(w(0, 0) == doctest::Approx(2.4).epsilon(1e-15));

  Mat p = Mat::Zero(2, 2);
  Mat g(2, 2);
  g << 1, -2, 3, -4;
  sgd_step(p, g, 1.0);
  CHECK((p + g).isZero(0.0));

  Mat q = Mat::Constant(2, 2, 5.0);
  sgd_step(q, Mat::Zero(2, 2), 0.5);
  CHECK(q.isApprox(Mat::Constant(2, 2, 5.0)));

  CHECK_THROWS_AS(sgd_step(p, Mat::Zero(3, 2), 0.1), Error);
  CHECK_THROWS_AS(sgd_step(p, Mat::Zero(2, 2), 0.0), Error);
}

TEST_CASE("phase plan binds data and loss selection to the phase") {
  CHECK(plan_for(Phase::I, 1, 0.1).data_selection() == DataSelection::source_only);
  CHECK(plan_for(Phase::II, 1, 0.1).data_selection() ==
        DataSelection::converted_and_source);
  CHECK(plan_for(Phase::III, 1, 0.1).data_selection() == DataSelection::converted_only);
  CHECK(plan_for(Phase::I, 1, 0.1).loss_selection() == LossSelection::aam);
  CHECK(plan_for(Phase::II, 1, 0.1).loss_selection() == LossSelection::aam);
  CHECK(plan_for(Phase::III, 1, 0.1).loss_selection() ==
        LossSelection::aam_plus_contrastive);
}

TEST_CASE("phase ordering is enforced") {
  const Corpus corpus = generate_corpus(tiny_corpus_config(), 101);
  const AAMConfig aam;
  CHECK_THROWS_AS(
      train_phase1(corpus, tiny_model_dims(), plan_for(Phase::II, 1, 0.05), aam, 1),
      Error);

  const TrainResult p1 =
      train_phase1(corpus, tiny_model_dims(), plan_for(Phase::I, 1, 0.05), aam, 1);
  CHECK(p1.checkpoint.phase == Phase::I);

  // Phase II rejects non-I checkpoints; phase III rejects non-II.
  Checkpoint fake2 = p1.checkpoint;
  fake2.phase = Phase::II;
  CHECK_THROWS_AS(train_phase2(corpus, fake2, plan_for(Phase::II, 1, 0.02), aam, 1),
                  Error);
  const SourceEmbeddingBank bank = build_embedding_bank(corpus, p1.checkpoint);
  CHECK_THROWS_AS(train_phase3(corpus, p1.checkpoint, bank,
                               plan_for(Phase::III, 1, 0.01), aam, ContrastiveConfig{},
                               1),
                  Error);
  CHECK_THROWS_AS(build_embedding_bank(corpus, fake2), Error);
}

TEST_CASE("training is deterministic down to checkpoint bytes") {
  const Corpus corpus = generate_corpus(tiny_corpus_config(), 103);
  const AAMConfig aam;
  const TrainResult a =
      train_phase1(corpus, tiny_model_dims(), plan_for(Phase::I, 2, 0.05), aam, 7);
  const TrainResult b =
      train_phase1(corpus, tiny_model_dims(), plan_for(Phase::I, 2, 0.05), aam, 7);
  const fs::path dir = fs::temp_directory_path() / "sstrace_test_pipeline";
  fs::create_directories(dir);
  save_checkpoint(a.checkpoint, dir / "a.ckpt");
  save_checkpoint(b.checkpoint, dir / "b.ckpt");
  CHECK(read_file(dir / "a.ckpt") == read_file(dir / "b.ckpt"));
  REQUIRE(a.step_losses.size() == b.step_losses.size());
  for (std::size_t i = 0; i < a.step_losses.size(); ++i)
    CHECK(a.step_losses[i] == b.step_losses[i]);
}

TEST_CASE("label audit: converted utterances carry the source speaker label") {
  const Corpus corpus = generate_corpus(tiny_corpus_config(), 107);
  const auto classes = speaker_classes(corpus.manifest);
  std::map<std::string, const UtteranceMeta*> by_id;
  for (const auto& u : corpus.manifest.utterances) by_id[u.utt_id] = &u;
  int converted_checked = 0;
  for (const auto& [utt_id, label] :
       training_labels(corpus, DataSelection::converted_and_source)) {
    const auto* meta = by_id.at(utt_id);
    CHECK(label == classes.at(meta->source_speaker));
    if (meta->converted()) {
      // Never the target speaker's class (targets are not classes at all).
      CHECK(classes.count(meta->target_speaker) == 0);
      ++converted_checked;
    }
  }
  CHECK(converted_checked > 0);
}

TEST_CASE("initialization audit: phase II starts from the phase I checkpoint") {
  const Corpus corpus = generate_corpus(tiny_corpus_config(), 109);
  const AAMConfig aam;
  const TrainResult p1 =
      train_phase1(corpus, tiny_model_dims(), plan_for(Phase::I, 1, 0.05), aam, 3);
  const TrainResult p2_noop =
      train_phase2(corpus, p1.checkpoint, plan_for(Phase::II, 0, 0.02), aam, 3);
  CHECK(p2_noop.checkpoint.phase == Phase::II);
  CHECK(params_equal(p2_noop.checkpoint.params, p1.checkpoint.params));
}

TEST_CASE("embedding bank: coverage, purity, definition") {
  const Corpus corpus = generate_corpus(tiny_corpus_config(), 113);
  const AAMConfig aam;
  const TrainResult p1 =
      train_phase1(corpus, tiny_model_dims(), plan_for(Phase::I, 1, 0.05), aam, 5);
  const SourceEmbeddingBank bank = build_embedding_bank(corpus, p1.checkpoint);

  const auto train_spk = corpus.manifest.source_speakers(Split::train);
  CHECK(bank.speakers() == train_spk);
  for (const auto& spk : train_spk) CHECK(!bank.by_speaker.at(spk).empty());

  const SourceEmbeddingBank again = build_embedding_bank(corpus, p1.checkpoint);
  for (const auto& [spk, embs] : bank.by_speaker) {
    const auto& other = again.by_speaker.at(spk);
    REQUIRE(other.size() == embs.size());
    for (std::size_t i = 0; i < embs.size(); ++i) {
      CHECK(other[i].utt_id == embs[i].utt_id);
      CHECK((other[i].values - embs[i].values).cwiseAbs().maxCoeff() == 0.0);
    }
  }

  // Definitional: bank embedding equals extract_embedding under phase I.
  const auto& sample = bank.by_speaker.begin()->second.front();
  const Vec direct =
      extract_embedding(corpus.features.at(sample.utt_id), p1.checkpoint.params);
  CHECK((sample.values - direct).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("contrastive sampling contracts") {
  const Corpus corpus = generate_corpus(tiny_corpus_config(), 127);
  const AAMConfig aam;
  const TrainResult p1 =
      train_phase1(corpus, tiny_model_dims(), plan_for(Phase::I, 1, 0.05), aam, 11);
  const SourceEmbeddingBank bank = build_embedding_bank(corpus, p1.checkpoint);
  const auto speakers = bank.speakers();
  const std::string spk = speakers[2];

  std::map<std::string, std::string> speaker_of;
  for (const auto& [s, embs] : bank.by_speaker)
    for (const auto& e : embs) speaker_of[e.utt_id] = s;

  SUBCASE("negatives come from K distinct other speakers") {
    Rng rng(1);
    for (int trial = 0; trial < 30; ++trial) {
      const auto [pos, negs] = sample_contrastive_set(bank, spk, 5, rng);
      CHECK(speaker_of.at(pos.utt_id) == spk);
      std::set<std::string> neg_speakers;
      for (const auto& n : negs) {
        CHECK(speaker_of.at(n.utt_id) != spk);
        neg_speakers.insert(speaker_of.at(n.utt_id));
      }
      CHECK(neg_speakers.size() == 5);
    }
  }

  SUBCASE("exact source utterance is preferred as the positive") {
    Rng rng(2);
    const std::string exact = bank.by_speaker.at(spk)[1].utt_id;
    for (int trial = 0; trial < 5; ++trial) {
      const auto [pos, negs] = sample_contrastive_set(bank, spk, 3, rng, exact);
      CHECK(pos.utt_id == exact);
    }
    // Unknown link falls back to a speaker-random draw.
    const auto [pos, negs] = sample_contrastive_set(bank, spk, 3, rng, "missing");
    CHECK(speaker_of.at(pos.utt_id) == spk);
  }

  SUBCASE("K = speakers - 1 exhausts every other speaker") {
    Rng rng(3);
    const int k = static_cast<int>(speakers.size()) - 1;
    const auto [pos, negs] = sample_contrastive_set(bank, spk, k, rng);
    std::set<std::string> neg_speakers;
    for (const auto& n : negs) neg_speakers.insert(speaker_of.at(n.utt_id));
    CHECK(static_cast<int>(neg_speakers.size()) == k);
    CHECK_THROWS_AS(sample_contrastive_set(bank, spk, k + 1, rng), Error);
  }

  SUBCASE("fixed rng seed reproduces the draws") {
    Rng rng1(4);
    Rng rng2(4);
    for (int trial = 0; trial < 10; ++trial) {
      const auto [p1s, n1s] = sample_contrastive_set(bank, spk, 4, rng1);
      const auto [p2s, n2s] = sample_contrastive_set(bank, spk, 4, rng2);
      CHECK(p1s.utt_id == p2s.utt_id);
      REQUIRE(n1s.size() == n2s.size());
      for (std::size_t i = 0; i < n1s.size(); ++i)
        CHECK(n1s[i].utt_id == n2s[i].utt_id);
    }
  }
}

TEST_CASE("phase III: alpha 0 equals the contrastive-disabled run; bank frozen") {
  const Corpus corpus = generate_corpus(tiny_corpus_config(), 131);
  const AAMConfig aam;
  const TrainResult p1 =
      train_phase1(corpus, tiny_model_dims(), plan_for(Phase::I, 1, 0.05), aam, 13);
  const TrainResult p2 =
      train_phase2(corpus, p1.checkpoint, plan_for(Phase::II, 1, 0.02), aam, 13);
  const SourceEmbeddingBank bank = build_embedding_bank(corpus, p1.checkpoint);

  ContrastiveConfig zero_alpha;
  zero_alpha.alpha = 0.0;
  const TrainResult with_con = train_phase3(corpus, p2.checkpoint, bank,
                                            plan_for(Phase::III, 2, 0.01), aam,
                                            zero_alpha, 13, true);
  const TrainResult without_con = train_phase3(corpus, p2.checkpoint, bank,
                                               plan_for(Phase::III, 2, 0.01), aam,
                                               zero_alpha, 13, false);
  REQUIRE(with_con.step_losses.size() == without_con.step_losses.size());
  for (std::size_t i = 0; i < with_con.step_losses.size(); ++i)
    CHECK(std::abs(with_con.step_losses[i] - without_con.step_losses[i]) < 1e-12);
  CHECK(params_equal(with_con.checkpoint.params, without_con.checkpoint.params));

  // The bank is never touched by training.
  const SourceEmbeddingBank rebuilt = build_embedding_bank(corpus, p1.checkpoint);
  for (const auto& [spk, embs] : bank.by_speaker) {
    const auto& other = rebuilt.by_speaker.at(spk);
    for (std::size_t i = 0; i < embs.size(); ++i)
      CHECK((other[i].values - embs[i].values).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("phase III pulls converted embeddings toward their bank positive") {
  CorpusConfig config = tiny_corpus_config();
  const Corpus corpus = generate_corpus(config, 137);
  const AAMConfig aam;
  const TrainResult p1 =
      train_phase1(corpus, tiny_model_dims(), plan_for(Phase::I, 6, 0.05), aam, 17);
  const TrainResult p2 =
      train_phase2(corpus, p1.checkpoint, plan_for(Phase::II, 4, 0.02), aam, 17);
  const SourceEmbeddingBank bank = build_embedding_bank(corpus, p1.checkpoint);
  const TrainResult p3 =
      train_phase3(corpus, p2.checkpoint, bank, plan_for(Phase::III, 6, 0.01), aam,
                   ContrastiveConfig{}, 17);

  const auto mean_cosine_to_positive = [&](const ExtractorParams& params) {
    double total = 0.0;
    int count = 0;
    for (const auto& u : corpus.manifest.utterances) {
      if (u.split != Split::train || !u.converted()) continue;
      const auto& own = bank.by_speaker.at(u.source_speaker);
      const std::string src = source_utt_of(u.utt_id);
      const Embedding* positive = nullptr;
      for (const auto& e : own)
        if (e.utt_id == src) positive = &e;
      REQUIRE(positive != nullptr);
      total += cosine(extract_embedding(corpus.features.at(u.utt_id), params),
                      positive->values);
      ++count;
    }
    return total / count;
  };
  const double before = mean_cosine_to_positive(p2.checkpoint.params);
  const double after = mean_cosine_to_positive(p3.checkpoint.params);
  CHECK(after > before);
}

TEST_CASE("phase I training loss decreases by epoch 5 on the default corpus") {
  const Corpus corpus = generate_corpus(CorpusConfig{}, 42);
  PhasePlan plan;
  plan.phase = Phase::I;
  plan.epochs = 5;
  plan.batch_size = 32;
  plan.learning_rate = 0.05;
  const TrainResult p1 = train_phase1(corpus, ModelDims{}, plan, AAMConfig{}, 42);
  REQUIRE(p1.epochs.size() == 5);
  CHECK(p1.epochs[4].loss < p1.epochs[0].loss);
}

TEST_CASE("run log lines carry six significant digits and a dash without con") {
  EpochStats stats;
  stats.epoch = 3;
  stats.loss = 1.2345678;
  stats.aam = 1.2345678;
  stats.con = 0.00012345678;
  stats.has_con = false;
  CHECK(format_epoch_line(Phase::II, stats, 0.02) ==
        "phase=II epoch=3 loss=1.23457 aam=1.23457 con=- lr=0.02");
  stats.has_con = true;
  CHECK(format_epoch_line(Phase::III, stats, 0.01) ==
        "phase=III epoch=3 loss=1.23457 aam=1.23457 con=0.000123457 lr=0.01");
}

TEST_SUITE_END();
