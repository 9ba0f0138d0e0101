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

#include "sstrace/run_config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <sstream>

#include "sstrace/error.hpp"
#include "sstrace/text_io.hpp"

namespace sstrace {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

struct Field {
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

class Schema {
 public:
  void bind(const std::string& key, int* v) {
    fields_[key] = {[v, key](const std::string& s) { *v = parse_int(key, s); },
                    [v] { return std::to_string(*v); }};
    order_.push_back(key);
  }
  void bind(const std::string& key, double* v) {
    fields_[key] = {[v, key](const std::string& s) { *v = parse_double(key, s); },
                    [v] { return g9(*v); }};
    order_.push_back(key);
  }
  void bind(const std::string& key, std::uint64_t* v) {
    fields_[key] = {[v, key](const std::string& s) { *v = parse_u64(key, s); },
                    [v] { return std::to_string(*v); }};
    order_.push_back(key);
  }

  void apply(const std::string& key, const std::string& value) const {
    const auto it = fields_.find(key);
    if (it == fields_.end()) fail("config", "unknown config key: " + key);
    it->second.set(value);
  }

  std::string echo() const {
    std::string out;
    for (const auto& key : order_) {
      out += key;
      out += " = ";
      out += fields_.at(key).get();
      out += '\n';
    }
    return out;
  }

 private:
  static int parse_int(const std::string& key, const std::string& s) {
    int v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
      fail("config", "bad integer for " + key + ": " + s);
    return v;
  }
  static std::uint64_t parse_u64(const std::string& key, const std::string& s) {
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
      fail("config", "bad unsigned integer for " + key + ": " + s);
    return v;
  }
  static double parse_double(const std::string& key, const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) fail("config", "bad number for " + key + ": " + s);
      return v;
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      fail("config", "bad number for " + key + ": " + s);
    }
  }

  std::map<std::string, Field> fields_;
  std::vector<std::string> order_;
};

Schema schema_for(RunConfig& c) {
  Schema s;
  s.bind("style_dim", &c.corpus.style_dim);
  s.bind("feat_dim", &c.corpus.feat_dim);
  s.bind("frames_min", &c.corpus.frames_min);
  s.bind("frames_max", &c.corpus.frames_max);
  s.bind("train_speakers", &c.corpus.train_speakers);
  s.bind("train_utts_per_speaker", &c.corpus.train_utts_per_speaker);
  s.bind("conversions_per_utt", &c.corpus.conversions_per_utt);
  s.bind("dev_speakers", &c.corpus.dev_speakers);
  s.bind("test_speakers", &c.corpus.test_speakers);
  s.bind("eval_utts_per_speaker", &c.corpus.eval_utts_per_speaker);
  s.bind("target_speakers", &c.corpus.target_speakers);
  s.bind("train_methods", &c.corpus.train_methods);
  s.bind("dev_extra_methods", &c.corpus.dev_extra_methods);
  s.bind("test_extra_methods", &c.corpus.test_extra_methods);
  s.bind("leak_min", &c.corpus.leak_min);
  s.bind("leak_max", &c.corpus.leak_max);
  s.bind("method_deviation", &c.corpus.method_deviation);
  s.bind("target_style_scale", &c.corpus.target_style_scale);
  s.bind("source_mix_scale", &c.corpus.source_mix_scale);
  s.bind("content_scale", &c.corpus.content_scale);
  s.bind("noise_scale", &c.corpus.noise_scale);
  s.bind("trial_pairs", &c.trial_pairs);
  s.bind("corpus_seed", &c.corpus_seed);
  s.bind("hidden_dim", &c.hidden_dim);
  s.bind("attn_dim", &c.attn_dim);
  s.bind("embed_dim", &c.embed_dim);
  s.bind("aam_scale", &c.aam.scale);
  s.bind("aam_margin", &c.aam.margin);
  s.bind("con_temperature", &c.contrastive.temperature);
  s.bind("con_negatives", &c.contrastive.negatives);
  s.bind("con_alpha", &c.contrastive.alpha);
  s.bind("phase1_epochs", &c.phase1_epochs);
  s.bind("phase2_epochs", &c.phase2_epochs);
  s.bind("phase3_epochs", &c.phase3_epochs);
  s.bind("phase1_lr", &c.phase1_lr);
  s.bind("phase2_lr", &c.phase2_lr);
  s.bind("phase3_lr", &c.phase3_lr);
  s.bind("batch_size", &c.batch_size);
  s.bind("train_seed", &c.train_seed);
  return s;
}

}  // namespace

ModelDims RunConfig::model_dims() const {
  ModelDims d;
  d.feat = corpus.feat_dim;
  d.hidden = hidden_dim;
  d.attn = attn_dim;
  d.embed = embed_dim;
  d.classes = 0;
  return d;
}

PhasePlan RunConfig::plan(Phase phase) const {
  PhasePlan p;
  p.phase = phase;
  p.batch_size = batch_size;
  switch (phase) {
    case Phase::I:
      p.epochs = phase1_epochs;
      p.learning_rate = phase1_lr;
      break;
    case Phase::II:
      p.epochs = phase2_epochs;
      p.learning_rate = phase2_lr;
      break;
    case Phase::III:
      p.epochs = phase3_epochs;
      p.learning_rate = phase3_lr;
      break;
  }
  return p;
}

void RunConfig::validate() const {
  corpus.validate();
  if (trial_pairs <= 0) fail("config", "trial_pairs must be positive");
  if (hidden_dim <= 0 || attn_dim <= 0 || embed_dim <= 0)
    fail("config", "model dims must be positive");
  for (const Phase phase : {Phase::I, Phase::II, Phase::III}) plan(phase).validate();
}

std::string RunConfig::echo() const {
  RunConfig copy = *this;
  return schema_for(copy).echo();
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig config;
  const Schema schema = schema_for(config);
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail("config", "line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      fail("config", "line " + std::to_string(line_no) + ": empty key or value");
    schema.apply(key, value);
  }
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_file(path));
}

}  // namespace sstrace
