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

#include "sstrace/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <utility>

#include "sstrace/error.hpp"

namespace sstrace {

std::string_view phase_tag(Phase p) {
  switch (p) {
    case Phase::I: return "I";
    case Phase::II: return "II";
    case Phase::III: return "III";
  }
  fail("phase", "unknown phase");
}

Phase parse_phase_tag(std::string_view tag) {
  if (tag == "I") return Phase::I;
  if (tag == "II") return Phase::II;
  if (tag == "III") return Phase::III;
  fail("phase", "unknown phase tag: " + std::string(tag));
}

DataSelection PhasePlan::data_selection() const {
  switch (phase) {
    case Phase::I: return DataSelection::source_only;
    case Phase::II: return DataSelection::converted_and_source;
    case Phase::III: return DataSelection::converted_only;
  }
  fail("phase", "unknown phase");
}

LossSelection PhasePlan::loss_selection() const {
  return phase == Phase::III ? LossSelection::aam_plus_contrastive : LossSelection::aam;
}

void PhasePlan::validate() const {
  if (epochs < 0) fail("config", "plan epochs must be >= 0");
  if (batch_size < 1) fail("config", "plan batch_size must be >= 1");
  if (learning_rate <= 0.0) fail("config", "plan learning_rate must be > 0");
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  write_checkpoint(ckpt.params, std::string(phase_tag(ckpt.phase)), path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  auto [params, tag] = read_checkpoint(path);
  return {std::move(params), parse_phase_tag(tag)};
}

std::string format_epoch_line(Phase phase, const EpochStats& stats, double lr) {
  char buf[160];
  char con[32];
  if (stats.has_con)
    std::snprintf(con, sizeof(con), "%.6g", stats.con);
  else
    std::snprintf(con, sizeof(con), "-");
  std::snprintf(buf, sizeof(buf), "phase=%s epoch=%d loss=%.6g aam=%.6g con=%s lr=%.6g",
                std::string(phase_tag(phase)).c_str(), stats.epoch, stats.loss,
                stats.aam, con, lr);
  return buf;
}

std::vector<std::string> SourceEmbeddingBank::speakers() const {
  std::vector<std::string> out;
  out.reserve(by_speaker.size());
  for (const auto& [spk, embs] : by_speaker) out.push_back(spk);
  return out;
}

bool SourceEmbeddingBank::has(const std::string& speaker_id) const {
  return by_speaker.count(speaker_id) != 0;
}

std::map<std::string, int> speaker_classes(const CorpusManifest& manifest) {
  std::map<std::string, int> classes;
  for (const auto& spk : manifest.source_speakers(Split::train))
    classes.emplace(spk, static_cast<int>(classes.size()));
  return classes;
}

void sgd_step(Mat& params, const Mat& grads, double learning_rate) {
  if (learning_rate <= 0.0) fail("config", "sgd_step: learning_rate must be > 0");
  if (params.rows() != grads.rows() || params.cols() != grads.cols())
    fail("shape", "sgd_step: params " + std::to_string(params.rows()) + "x" +
                      std::to_string(params.cols()) + " vs grads " +
                      std::to_string(grads.rows()) + "x" + std::to_string(grads.cols()));
  params -= learning_rate * grads;
}

namespace {

struct TrainItem {
  const UtteranceMeta* meta = nullptr;
  const Mat* features = nullptr;
  int label = -1;
};

std::vector<TrainItem> collect_items(const Corpus& corpus, DataSelection selection,
                                     const std::map<std::string, int>& classes) {
  std::vector<TrainItem> items;
  for (const auto& u : corpus.manifest.utterances) {
    if (u.split != Split::train) continue;
    if (selection == DataSelection::source_only && u.converted()) continue;
    if (selection == DataSelection::converted_only && !u.converted()) continue;
    TrainItem item;
    item.meta = &u;
    const auto feat = corpus.features.find(u.utt_id);
    if (feat == corpus.features.end())
      fail("data", "missing features for train utterance " + u.utt_id);
    item.features = &feat->second;
    // Converted utterances carry their source speaker's label.
    const auto cls = classes.find(u.source_speaker);
    if (cls == classes.end())
      fail("data", "utterance " + u.utt_id + " has unknown speaker label " +
                       u.source_speaker);
    item.label = cls->second;
    items.push_back(item);
  }
  // Fixed order regardless of manifest layout, so shuffles are reproducible.
  std::sort(items.begin(), items.end(), [](const TrainItem& a, const TrainItem& b) {
    return a.meta->utt_id < b.meta->utt_id;
  });
  return items;
}

}  // namespace

std::vector<std::pair<std::string, int>> training_labels(const Corpus& corpus,
                                                         DataSelection selection) {
  std::vector<std::pair<std::string, int>> out;
  for (const auto& item :
       collect_items(corpus, selection, speaker_classes(corpus.manifest)))
    out.emplace_back(item.meta->utt_id, item.label);
  return out;
}

namespace {

struct ContrastiveContext {
  const SourceEmbeddingBank* bank = nullptr;
  ContrastiveConfig cfg;
  Rng* rng = nullptr;
};

TrainResult run_training(const Corpus& corpus, ExtractorParams params,
                         const PhasePlan& plan, const AAMConfig& aam_cfg,
                         ContrastiveContext* contrastive, Phase out_phase,
                         std::uint64_t seed) {
  plan.validate();
  const auto classes = speaker_classes(corpus.manifest);
  if (static_cast<int>(classes.size()) != params.dims.classes)
    fail("data", "corpus has " + std::to_string(classes.size()) +
                     " train speakers but the head expects " +
                     std::to_string(params.dims.classes));
  const std::vector<TrainItem> items =
      collect_items(corpus, plan.data_selection(), classes);
  if (items.empty()) fail("data", "no training utterances for this phase");

  TrainResult result;
  Rng shuffle_rng =
      Rng::derive(seed, "shuffle:" + std::string(phase_tag(plan.phase)));

  std::vector<std::size_t> order(items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  ad::Tape tape;
  for (int epoch = 1; epoch <= plan.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0, epoch_aam = 0.0, epoch_con = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(plan.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(plan.batch_size));
      tape.reset();
      const StagedParams staged = stage(tape, params, /*trainable=*/true);
      ad::Value total;
      for (std::size_t at = start; at < stop; ++at) {
        const TrainItem& item = items[order[at]];
        const ad::Value emb =
            extract_embedding_t(tape, tape.constant(*item.features), staged);
        const ad::Value aam =
            aam_loss_t(tape, emb, staged.head_w, item.label, aam_cfg);
        ad::Value item_loss = aam;
        epoch_aam += aam.scalar();
        if (contrastive != nullptr) {
          const auto [positive, negatives] = sample_contrastive_set(
              *contrastive->bank, item.meta->source_speaker,
              contrastive->cfg.negatives, *contrastive->rng,
              source_utt_of(item.meta->utt_id));
          std::vector<ad::Value> negs;
          negs.reserve(negatives.size());
          for (const auto& n : negatives) negs.push_back(tape.constant(n.values));
          const ad::Value con = contrastive_loss_t(
              tape, emb, tape.constant(positive.values), negs, contrastive->cfg);
          epoch_con += con.scalar();
          item_loss = combined_loss_t(aam, con, contrastive->cfg.alpha);
        }
        epoch_loss += item_loss.scalar();
        total = at == start ? item_loss : ad::add(total, item_loss);
      }
      const ad::Value mean =
          ad::scale(total, 1.0 / static_cast<double>(stop - start));
      tape.backward(mean);
      result.step_losses.push_back(mean.scalar());

      const std::vector<std::pair<Mat*, const ad::Value*>> updates = {
          {&params.enc1_w, &staged.enc1_w}, {&params.enc1_b, &staged.enc1_b},
          {&params.enc2_w, &staged.enc2_w}, {&params.enc2_b, &staged.enc2_b},
          {&params.pool_w, &staged.pool_w}, {&params.pool_b, &staged.pool_b},
          {&params.pool_v, &staged.pool_v}, {&params.emb_w, &staged.emb_w},
          {&params.emb_b, &staged.emb_b},   {&params.head_w, &staged.head_w}};
      for (const auto& [tensor, value] : updates)
        sgd_step(*tensor, value->grad(), plan.learning_rate);
    }
    EpochStats stats;
    stats.epoch = epoch;
    const double n = static_cast<double>(items.size());
    stats.loss = epoch_loss / n;
    stats.aam = epoch_aam / n;
    stats.has_con = contrastive != nullptr;
    stats.con = stats.has_con ? epoch_con / n : 0.0;
    result.epochs.push_back(stats);
  }

  result.checkpoint.params = std::move(params);
  result.checkpoint.phase = out_phase;
  return result;
}

}  // namespace

TrainResult train_phase1(const Corpus& corpus, const ModelDims& dims,
                         const PhasePlan& plan, const AAMConfig& aam_cfg,
                         std::uint64_t seed) {
  if (plan.phase != Phase::I)
    fail("phase", "train_phase1: plan is for phase " +
                      std::string(phase_tag(plan.phase)));
  const auto classes = speaker_classes(corpus.manifest);
  ModelDims d = dims;
  d.feat = corpus.manifest.feat_dim;
  d.classes = static_cast<int>(classes.size());
  ExtractorParams params = ExtractorParams::init(d, seed);
  return run_training(corpus, std::move(params), plan, aam_cfg, nullptr, Phase::I, seed);
}

TrainResult train_phase2(const Corpus& corpus, const Checkpoint& phase1,
                         const PhasePlan& plan, const AAMConfig& aam_cfg,
                         std::uint64_t seed) {
  if (plan.phase != Phase::II)
    fail("phase", "train_phase2: plan is for phase " +
                      std::string(phase_tag(plan.phase)));
  if (phase1.phase != Phase::I)
    fail("phase", "train_phase2: expected a phase I checkpoint, got " +
                      std::string(phase_tag(phase1.phase)));
  return run_training(corpus, phase1.params, plan, aam_cfg, nullptr, Phase::II, seed);
}

SourceEmbeddingBank build_embedding_bank(const Corpus& corpus, const Checkpoint& phase1) {
  if (phase1.phase != Phase::I)
    fail("phase", "build_embedding_bank: expected a phase I checkpoint, got " +
                      std::string(phase_tag(phase1.phase)));
  SourceEmbeddingBank bank;
  bank.built_from = Phase::I;
  std::vector<const UtteranceMeta*> sources;
  for (const auto& u : corpus.manifest.utterances)
    if (u.split == Split::train && !u.converted()) sources.push_back(&u);
  if (sources.empty()) fail("data", "no unconverted train utterances for the bank");
  std::sort(sources.begin(), sources.end(),
            [](const auto* a, const auto* b) { return a->utt_id < b->utt_id; });
  for (const auto* u : sources) {
    const auto feat = corpus.features.find(u->utt_id);
    if (feat == corpus.features.end())
      fail("data", "missing features for source utterance " + u->utt_id);
    Embedding e;
    e.utt_id = u->utt_id;
    e.values = extract_embedding(feat->second, phase1.params);
    bank.by_speaker[u->source_speaker].push_back(std::move(e));
  }
  return bank;
}

std::pair<Embedding, std::vector<Embedding>> sample_contrastive_set(
    const SourceEmbeddingBank& bank, const std::string& source_spk, int k, Rng& rng,
    const std::optional<std::string>& source_utt) {
  const auto it = bank.by_speaker.find(source_spk);
  if (it == bank.by_speaker.end())
    fail("data", "bank has no embeddings for source speaker " + source_spk);
  const auto& own = it->second;
  if (static_cast<int>(bank.by_speaker.size()) - 1 < k)
    fail("sampling", "bank has " + std::to_string(bank.by_speaker.size() - 1) +
                         " other speakers, need K = " + std::to_string(k));

  // Positive: exact source utterance when the bank holds it.
  Embedding positive;
  bool found_exact = false;
  if (source_utt) {
    for (const auto& e : own) {
      if (e.utt_id == *source_utt) {
        positive = e;
        found_exact = true;
        break;
      }
    }
  }
  if (!found_exact) positive = own[rng.below(own.size())];

  // Negatives: K distinct other speakers, one embedding each.
  std::vector<std::string> others;
  others.reserve(bank.by_speaker.size() - 1);
  for (const auto& [spk, embs] : bank.by_speaker)
    if (spk != source_spk) others.push_back(spk);
  const std::vector<int> chosen =
      rng.sample_without_replacement(static_cast<int>(others.size()), k);
  std::vector<Embedding> negatives;
  negatives.reserve(static_cast<std::size_t>(k));
  for (const int idx : chosen) {
    const auto& list = bank.by_speaker.at(others[static_cast<std::size_t>(idx)]);
    negatives.push_back(list[rng.below(list.size())]);
  }
  return {std::move(positive), std::move(negatives)};
}

TrainResult train_phase3(const Corpus& corpus, const Checkpoint& phase2,
                         const SourceEmbeddingBank& bank, const PhasePlan& plan,
                         const AAMConfig& aam_cfg, const ContrastiveConfig& con_cfg,
                         std::uint64_t seed, bool compute_contrastive) {
  if (plan.phase != Phase::III)
    fail("phase", "train_phase3: plan is for phase " +
                      std::string(phase_tag(plan.phase)));
  if (phase2.phase != Phase::II)
    fail("phase", "train_phase3: expected a phase II checkpoint, got " +
                      std::string(phase_tag(phase2.phase)));
  if (bank.built_from != Phase::I)
    fail("phase", "train_phase3: bank must come from the phase I model");
  Rng neg_rng = Rng::derive(seed, "negatives:III");
  ContrastiveContext ctx{&bank, con_cfg, &neg_rng};
  return run_training(corpus, phase2.params, plan, aam_cfg,
                      compute_contrastive ? &ctx : nullptr, Phase::III, seed);
}

std::map<std::string, Vec> extract_embeddings(const Corpus& corpus,
                                              const ExtractorParams& params,
                                              const std::vector<std::string>& utt_ids) {
  std::map<std::string, Vec> out;
  for (const auto& id : utt_ids) {
    if (out.count(id)) continue;
    const auto it = corpus.features.find(id);
    if (it == corpus.features.end()) fail("lookup", "no features for utterance " + id);
    out.emplace(id, extract_embedding(it->second, params));
  }
  return out;
}

}  // namespace sstrace
