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

#include "sstrace/model.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <string>
#include <utility>

#include "sstrace/error.hpp"
#include "sstrace/rng.hpp"
#include "sstrace/text_io.hpp"

namespace sstrace {

namespace {

constexpr std::string_view kCkptMagic = "#source-trace-ckpt v1";
constexpr double kVarianceFloor = 1e-9;

Mat uniform_init(Rng& rng, Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Mat m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.uniform(-bound, bound);
  return m;
}

void require_shape(const Mat& m, Eigen::Index rows, Eigen::Index cols,
                   const std::string& name) {
  if (m.rows() != rows || m.cols() != cols)
    fail("shape", "parameter " + name + " is " + std::to_string(m.rows()) + "x" +
                      std::to_string(m.cols()) + ", expected " + std::to_string(rows) +
                      "x" + std::to_string(cols));
}

}  // namespace

ExtractorParams ExtractorParams::init(const ModelDims& dims, std::uint64_t seed) {
  if (dims.feat <= 0 || dims.hidden <= 0 || dims.attn <= 0 || dims.embed <= 0 ||
      dims.classes <= 0)
    fail("config", "model dims must all be positive");
  ExtractorParams p;
  p.dims = dims;
  Rng rng = Rng::derive(seed, "model-init");
  p.enc1_w = uniform_init(rng, dims.feat, dims.hidden, dims.feat);
  p.enc1_b = uniform_init(rng, 1, dims.hidden, dims.feat);
  p.enc2_w = uniform_init(rng, dims.hidden, dims.hidden, dims.hidden);
  p.enc2_b = uniform_init(rng, 1, dims.hidden, dims.hidden);
  p.pool_w = uniform_init(rng, dims.hidden, dims.attn, dims.hidden);
  p.pool_b = uniform_init(rng, 1, dims.attn, dims.hidden);
  p.pool_v = uniform_init(rng, dims.attn, 1, dims.attn);
  p.emb_w = uniform_init(rng, 2 * dims.hidden, dims.embed, 2 * dims.hidden);
  p.emb_b = uniform_init(rng, 1, dims.embed, 2 * dims.hidden);
  p.head_w = uniform_init(rng, dims.classes, dims.embed, dims.embed);
  return p;
}

std::vector<std::pair<std::string, Mat*>> ExtractorParams::tensors() {
  std::vector<std::pair<std::string, Mat*>> out = {
      {"enc1_w", &enc1_w}, {"enc1_b", &enc1_b}, {"enc2_w", &enc2_w},
      {"enc2_b", &enc2_b}, {"pool_w", &pool_w}, {"pool_b", &pool_b},
      {"pool_v", &pool_v}, {"emb_w", &emb_w},   {"emb_b", &emb_b},
      {"head_w", &head_w}};
  if (method_head_w) out.emplace_back("method_head_w", &*method_head_w);
  return out;
}

std::vector<std::pair<std::string, const Mat*>> ExtractorParams::tensors() const {
  std::vector<std::pair<std::string, const Mat*>> out;
  for (auto& [name, mat] : const_cast<ExtractorParams*>(this)->tensors())
    out.emplace_back(name, mat);
  return out;
}

long long ExtractorParams::parameter_count() const {
  long long n = 0;
  for (const auto& [name, mat] : tensors()) n += mat->size();
  return n;
}

void ExtractorParams::check_shapes() const {
  const auto& d = dims;
  require_shape(enc1_w, d.feat, d.hidden, "enc1_w");
  require_shape(enc1_b, 1, d.hidden, "enc1_b");
  require_shape(enc2_w, d.hidden, d.hidden, "enc2_w");
  require_shape(enc2_b, 1, d.hidden, "enc2_b");
  require_shape(pool_w, d.hidden, d.attn, "pool_w");
  require_shape(pool_b, 1, d.attn, "pool_b");
  require_shape(pool_v, d.attn, 1, "pool_v");
  require_shape(emb_w, 2 * d.hidden, d.embed, "emb_w");
  require_shape(emb_b, 1, d.embed, "emb_b");
  require_shape(head_w, d.classes, d.embed, "head_w");
  for (const auto& [name, mat] : tensors())
    if (!all_finite(*mat)) fail("data", "parameter " + name + " has non-finite entries");
}

StagedParams stage(ad::Tape& tape, const ExtractorParams& params, bool trainable) {
  params.check_shapes();
  const auto leaf = [&](const Mat& m) {
    return trainable ? tape.input(m) : tape.constant(m);
  };
  StagedParams s;
  s.enc1_w = leaf(params.enc1_w);
  s.enc1_b = leaf(params.enc1_b);
  s.enc2_w = leaf(params.enc2_w);
  s.enc2_b = leaf(params.enc2_b);
  s.pool_w = leaf(params.pool_w);
  s.pool_b = leaf(params.pool_b);
  s.pool_v = leaf(params.pool_v);
  s.emb_w = leaf(params.emb_w);
  s.emb_b = leaf(params.emb_b);
  s.head_w = leaf(params.head_w);
  return s;
}

ad::Value encode_frames(ad::Tape& tape, const ad::Value& features, const StagedParams& p) {
  if (features.cols() != p.enc1_w.rows())
    fail("shape", "encode_frames: features have " + std::to_string(features.cols()) +
                      " columns, encoder expects " + std::to_string(p.enc1_w.rows()));
  (void)tape;
  const ad::Value h1 = ad::tanh(ad::affine(features, p.enc1_w, p.enc1_b));
  return ad::tanh(ad::affine(h1, p.enc2_w, p.enc2_b));
}

ad::Value attentive_stats_pool(ad::Tape& tape, const ad::Value& hidden,
                               const StagedParams& p) {
  if (hidden.rows() < 1) fail("empty", "attentive_stats_pool: empty frame sequence");
  (void)tape;
  // alpha_t = softmax_t( v . tanh(W h_t + b) )
  const ad::Value scores = ad::tanh(ad::affine(hidden, p.pool_w, p.pool_b));
  const ad::Value logits = ad::matmul(scores, p.pool_v);  // T x 1
  const ad::Value alpha = ad::softmax(logits);
  const ad::Value alpha_t = ad::transpose(alpha);           // 1 x T
  const ad::Value mean = ad::matmul(alpha_t, hidden);       // 1 x H
  const ad::Value second = ad::matmul(alpha_t, ad::cmul(hidden, hidden));
  const ad::Value variance =
      ad::clamp_min(ad::sub(second, ad::cmul(mean, mean)), kVarianceFloor);
  return ad::hcat(mean, ad::sqrt(variance));  // 1 x 2H
}

ad::Value extract_embedding_t(ad::Tape& tape, const ad::Value& features,
                              const StagedParams& p) {
  const ad::Value hidden = encode_frames(tape, features, p);
  const ad::Value pooled = attentive_stats_pool(tape, hidden, p);
  return ad::affine(pooled, p.emb_w, p.emb_b);
}

Vec extract_embedding(const Mat& features, const ExtractorParams& params) {
  ad::Tape tape;
  const StagedParams staged = stage(tape, params, /*trainable=*/false);
  const ad::Value emb = extract_embedding_t(tape, tape.constant(features), staged);
  if (!all_finite(emb.val())) fail("data", "extract_embedding: non-finite embedding");
  return emb.val().row(0).transpose();
}

void write_checkpoint(const ExtractorParams& params, const std::string& phase_tag,
                      const std::filesystem::path& path) {
  params.check_shapes();
  std::ofstream out = open_out(path);
  out << kCkptMagic << '\n';
  out << "dims feat=" << params.dims.feat << " hidden=" << params.dims.hidden
      << " attn=" << params.dims.attn << " embed=" << params.dims.embed
      << " classes=" << params.dims.classes << '\n';
  out << "phase " << phase_tag << '\n';
  std::string buf;
  for (const auto& [name, mat] : params.tensors()) {
    buf.clear();
    buf += name;
    buf += ' ';
    buf += std::to_string(mat->rows());
    buf += ' ';
    buf += std::to_string(mat->cols());
    for (Eigen::Index r = 0; r < mat->rows(); ++r)
      for (Eigen::Index c = 0; c < mat->cols(); ++c) {
        buf += ' ';
        append_g9(buf, (*mat)(r, c));
      }
    buf += '\n';
    out << buf;
  }
}

std::pair<ExtractorParams, std::string> read_checkpoint(
    const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line != kCkptMagic)
    fail("io", "not a checkpoint file: " + path.string());

  ExtractorParams params;
  if (!std::getline(in, line) || line.rfind("dims ", 0) != 0)
    fail("io", "checkpoint missing dims line");
  for (const auto& f : split_ws(line.substr(5))) {
    const auto eq = f.find('=');
    if (eq == std::string::npos) fail("io", "bad dims field: " + f);
    const std::string key = f.substr(0, eq);
    const int value = std::stoi(f.substr(eq + 1));
    if (key == "feat")
      params.dims.feat = value;
    else if (key == "hidden")
      params.dims.hidden = value;
    else if (key == "attn")
      params.dims.attn = value;
    else if (key == "embed")
      params.dims.embed = value;
    else if (key == "classes")
      params.dims.classes = value;
    else
      fail("io", "unknown dims key: " + key);
  }
  if (!std::getline(in, line) || line.rfind("phase ", 0) != 0)
    fail("io", "checkpoint missing phase line");
  const std::string phase_tag = line.substr(6);

  std::map<std::string, Mat> loaded;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const char* p = line.c_str();
    const char* sp1 = std::strchr(p, ' ');
    if (sp1 == nullptr) fail("io", "bad tensor line in checkpoint");
    const std::string name(p, sp1);
    char* end = nullptr;
    const long rows = std::strtol(sp1 + 1, &end, 10);
    const long cols = std::strtol(end, &end, 10);
    if (rows <= 0 || cols <= 0) fail("io", "bad tensor shape for " + name);
    Mat m(rows, cols);
    for (long r = 0; r < rows; ++r)
      for (long c = 0; c < cols; ++c) {
        const char* start = end;
        m(r, c) = std::strtod(start, &end);
        if (end == start) fail("io", "truncated tensor values for " + name);
      }
    loaded.emplace(name, std::move(m));
  }
  for (auto& [name, mat] : params.tensors()) {
    const auto it = loaded.find(name);
    if (it == loaded.end() && name == "method_head_w") continue;
    if (it == loaded.end()) fail("io", "checkpoint missing tensor " + name);
    *mat = it->second;
    loaded.erase(it);
  }
  if (const auto it = loaded.find("method_head_w"); it != loaded.end()) {
    params.method_head_w = it->second;
    loaded.erase(it);
  }
  if (!loaded.empty()) fail("io", "checkpoint has unknown tensor " + loaded.begin()->first);
  params.check_shapes();
  return {std::move(params), phase_tag};
}

void write_embeddings(const std::map<std::string, Vec>& embeddings,
                      const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  std::string buf;
  for (const auto& [utt_id, values] : embeddings) {
    buf.clear();
    buf += utt_id;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
      buf += ' ';
      append_g9(buf, values(i));
    }
    buf += '\n';
    out << buf;
  }
}

std::map<std::string, Vec> read_embeddings(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::map<std::string, Vec> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_ws(line);
    if (fields.size() < 2) fail("io", "bad embedding line: " + line);
    Vec v(static_cast<Eigen::Index>(fields.size()) - 1);
    for (std::size_t i = 1; i < fields.size(); ++i)
      v(static_cast<Eigen::Index>(i - 1)) = std::strtod(fields[i].c_str(), nullptr);
    out[fields[0]] = std::move(v);
  }
  return out;
}

}  // namespace sstrace
