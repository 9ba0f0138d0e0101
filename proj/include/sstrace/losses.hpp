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

#include <span>

#include "sstrace/autodiff.hpp"
#include "sstrace/types.hpp"

namespace sstrace {

struct AAMConfig {
  double scale = 32.0;  // s
  double margin = 0.2;  // m, radians in [0, pi/2)
};

struct ContrastiveConfig {
  double temperature = 0.07;  // tau
  int negatives = 5;          // K
  double alpha = 1.0;         // weight of the contrastive term
};

// Additive angular margin softmax: cosines between the L2-normalized
// embedding and class rows, margin m added to the true-class angle, all
// logits scaled by s, then cross-entropy. cos(theta+m) is expanded as
// cos*cos(m) - sin*sin(m) with sin = sqrt(max(1 - cos^2, 0)); when
// theta_y + m would pass pi the loss falls back to the linear penalty
// cos(theta_y) - m*sin(m), which keeps it monotone.
ad::Value aam_loss_t(ad::Tape& tape, const ad::Value& embedding,
                     const ad::Value& class_weights, int label, const AAMConfig& cfg);
double aam_loss(const Vec& embedding, const Mat& class_weights, int label,
                const AAMConfig& cfg);

// Softmax-over-cosines loss selecting the positive among K negatives; the
// denominator runs over the positive plus the K negatives (K+1 terms).
ad::Value contrastive_loss_t(ad::Tape& tape, const ad::Value& converted,
                             const ad::Value& positive,
                             std::span<const ad::Value> negatives,
                             const ContrastiveConfig& cfg);
double contrastive_loss(const Vec& converted, const Vec& positive,
                        std::span<const Vec> negatives, const ContrastiveConfig& cfg);

// total = aam + alpha * contrastive
ad::Value combined_loss_t(const ad::Value& aam, const ad::Value& contrastive,
                          double alpha);
double combined_loss(double aam, double contrastive, double alpha);

}  // namespace sstrace
