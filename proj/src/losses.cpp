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

#include "sstrace/losses.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "sstrace/error.hpp"

namespace sstrace {

namespace {

void check_aam_cfg(const AAMConfig& cfg) {
  if (cfg.scale <= 0.0) fail("config", "aam scale must be positive");
  if (cfg.margin < 0.0 || cfg.margin >= M_PI / 2)
    fail("config", "aam margin must lie in [0, pi/2)");
}

void check_contrastive_cfg(const ContrastiveConfig& cfg) {
  if (cfg.temperature <= 0.0) fail("config", "contrastive temperature must be positive");
  if (cfg.negatives < 1) fail("config", "contrastive K must be >= 1");
  if (cfg.alpha < 0.0) fail("config", "contrastive alpha must be >= 0");
}

void check_nonzero(const Mat& v, const char* what) {
  if (v.norm() == 0.0) fail("degenerate", std::string(what) + ": zero-norm vector");
}

// v / ||v|| as a tape expression; v is any vector-shaped node.
ad::Value normalized(const ad::Value& v) {
  return ad::vscale(v, ad::cdiv(v.tape().scalar_constant(1.0), ad::norm(v)));
}

ad::Value as_column(const ad::Value& v) {
  if (v.rows() != 1 && v.cols() != 1)
    fail("shape", "expected a vector, got " + std::to_string(v.rows()) + "x" +
                      std::to_string(v.cols()));
  return v.rows() == 1 ? ad::transpose(v) : v;
}

}  // namespace

ad::Value aam_loss_t(ad::Tape& tape, const ad::Value& embedding,
                     const ad::Value& class_weights, int label, const AAMConfig& cfg) {
  check_aam_cfg(cfg);
  const Eigen::Index classes = class_weights.rows();
  const Eigen::Index dim = class_weights.cols();
  if (embedding.val().size() != dim)
    fail("shape", "aam_loss: embedding size " + std::to_string(embedding.val().size()) +
                      " vs class weights " + std::to_string(classes) + "x" +
                      std::to_string(dim));
  if (label < 0 || label >= classes)
    fail("index", "aam_loss: label " + std::to_string(label) + " out of range [0, " +
                      std::to_string(classes) + ")");
  check_nonzero(embedding.val(), "aam_loss embedding");
  for (Eigen::Index r = 0; r < classes; ++r)
    if (class_weights.val().row(r).norm() == 0.0)
      fail("degenerate", "aam_loss: class weight row " + std::to_string(r) +
                             " has zero norm");

  // Row-normalize the class weights: W_n = W ./ rownorm.
  const ad::Value row_sq =
      ad::matmul(ad::cmul(class_weights, class_weights),
                 tape.constant(Mat::Ones(dim, 1)));  // C x 1
  const ad::Value inv_row_norm =
      ad::cdiv(tape.constant(Mat::Ones(classes, 1)), ad::sqrt(row_sq));
  const ad::Value w_norm =
      ad::cmul(class_weights,
               ad::matmul(inv_row_norm, tape.constant(Mat::Ones(1, dim))));

  // Embedding as a normalized column vector.
  const ad::Value e_col =
      embedding.rows() == 1 ? ad::transpose(embedding) : embedding;
  const ad::Value e_norm = normalized(e_col);
  const ad::Value cosines = ad::matmul(w_norm, e_norm);  // C x 1

  Mat onehot = Mat::Zero(classes, 1);
  onehot(label, 0) = 1.0;
  const ad::Value pick = tape.constant(onehot);
  const ad::Value cos_y = ad::dot(cosines, pick);

  const double cos_m = std::cos(cfg.margin);
  const double sin_m = std::sin(cfg.margin);
  ad::Value phi;
  if (cos_y.scalar() > std::cos(M_PI - cfg.margin)) {
    // cos(theta + m) = cos*cos(m) - sin*sin(m), sin = sqrt(max(1-cos^2, 0))
    const ad::Value sin_y = ad::sqrt(ad::clamp_min(
        ad::sub(tape.scalar_constant(1.0), ad::cmul(cos_y, cos_y)), 0.0));
    phi = ad::sub(ad::scale(cos_y, cos_m), ad::scale(sin_y, sin_m));
  } else {
    // theta_y + m would pass pi: linear fallback keeps the loss monotone.
    phi = ad::add_scalar(cos_y, -cfg.margin * sin_m);
  }

  // Replace the true-class entry, scale, cross-entropy.
  const ad::Value adjusted =
      ad::add(cosines, ad::vscale(pick, ad::sub(phi, cos_y)));
  const ad::Value logits = ad::scale(adjusted, cfg.scale);
  return ad::sub(ad::logsumexp(logits), ad::dot(logits, pick));
}

double aam_loss(const Vec& embedding, const Mat& class_weights, int label,
                const AAMConfig& cfg) {
  ad::Tape tape;
  return aam_loss_t(tape, tape.constant(embedding), tape.constant(class_weights), label,
                    cfg)
      .scalar();
}

ad::Value contrastive_loss_t(ad::Tape& tape, const ad::Value& converted,
                             const ad::Value& positive,
                             std::span<const ad::Value> negatives,
                             const ContrastiveConfig& cfg) {
  check_contrastive_cfg(cfg);
  if (static_cast<int>(negatives.size()) != cfg.negatives)
    fail("arity", "contrastive_loss: got " + std::to_string(negatives.size()) +
                      " negatives, configured K = " + std::to_string(cfg.negatives));
  check_nonzero(converted.val(), "contrastive_loss converted embedding");
  check_nonzero(positive.val(), "contrastive_loss positive");
  const Eigen::Index dim = converted.val().size();
  const auto check_dim = [dim](const Mat& v, const char* what) {
    if (v.size() != dim)
      fail("shape", std::string(what) + ": dimension " + std::to_string(v.size()) +
                        " vs converted embedding " + std::to_string(dim));
  };
  check_dim(positive.val(), "contrastive_loss positive");

  const ad::Value e_c = as_column(converted);
  std::vector<ad::Value> scaled;
  scaled.reserve(negatives.size() + 1);
  scaled.push_back(
      ad::scale(ad::cosine(e_c, as_column(positive)), 1.0 / cfg.temperature));
  for (const auto& neg : negatives) {
    check_dim(neg.val(), "contrastive_loss negative");
    check_nonzero(neg.val(), "contrastive_loss negative");
    scaled.push_back(
        ad::scale(ad::cosine(e_c, as_column(neg)), 1.0 / cfg.temperature));
  }
  // -log softmax[positive] over the K+1 candidates.
  const ad::Value logits = ad::stack_scalars(tape, scaled);
  return ad::sub(ad::logsumexp(logits), scaled.front());
}

double contrastive_loss(const Vec& converted, const Vec& positive,
                        std::span<const Vec> negatives, const ContrastiveConfig& cfg) {
  ad::Tape tape;
  std::vector<ad::Value> negs;
  negs.reserve(negatives.size());
  for (const auto& n : negatives) negs.push_back(tape.constant(n));
  return contrastive_loss_t(tape, tape.constant(converted), tape.constant(positive),
                            negs, cfg)
      .scalar();
}

ad::Value combined_loss_t(const ad::Value& aam, const ad::Value& contrastive,
                          double alpha) {
  return ad::add(aam, ad::scale(contrastive, alpha));
}

double combined_loss(double aam, double contrastive, double alpha) {
  if (!std::isfinite(aam) || !std::isfinite(contrastive))
    fail("eval", "combined_loss: non-finite input");
  return aam + alpha * contrastive;
}

}  // namespace sstrace
