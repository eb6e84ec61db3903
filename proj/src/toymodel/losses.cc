/* Copyright 2026 The NSmark Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "nsmark/toymodel/losses.h"

namespace nsmark {
namespace {

double SquaredCosineStream(std::span<const Vector> outputs,
                           const Vector& target, std::vector<Vector>* grads) {
  if (grads != nullptr) grads->assign(outputs.size(), Vector());
  if (outputs.empty()) return 0.0;
  const double inv = 1.0 / static_cast<double>(outputs.size());
  double total = 0.0;
  for (size_t i = 0; i < outputs.size(); ++i) {
    Require(outputs[i].size() == target.size(),
            "extractor output length differs from the spread signature");
    Vector g;
    const double c = CosineSimilarity(outputs[i], target,
                                      grads != nullptr ? &g : nullptr);
    total += c * c;
    if (grads != nullptr) (*grads)[i] = (2.0 * c * inv) * g;
  }
  return total * inv;
}

}  // namespace

Vector ToVector(std::span<const int8_t> bits) {
  Vector v(static_cast<Eigen::Index>(bits.size()));
  for (size_t i = 0; i < bits.size(); ++i) v[i] = bits[i];
  return v;
}

double LossMatch(std::span<const Vector> outputs, const Vector& target,
                 std::vector<Vector>* grads) {
  Require(!outputs.empty(), "L_match needs a non-empty batch");
  Require(target.size() > 0, "empty spread signature");
  if (grads != nullptr) grads->assign(outputs.size(), Vector());
  const double batch_inv = 1.0 / static_cast<double>(outputs.size());
  const double elem_inv = 1.0 / static_cast<double>(target.size());
  double total = 0.0;
  for (size_t i = 0; i < outputs.size(); ++i) {
    Require(outputs[i].size() == target.size(),
            "extractor output length differs from the spread signature");
    const Vector diff = outputs[i] - target;
    total += diff.squaredNorm() * elem_inv;
    if (grads != nullptr) (*grads)[i] = (2.0 * elem_inv * batch_inv) * diff;
  }
  return total * batch_inv;
}

double CosineSimilarity(const Vector& a, const Vector& b, Vector* grad_a) {
  Require(a.size() == b.size(), "cosine similarity of unequal lengths");
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) {
    if (grad_a != nullptr) *grad_a = Vector::Zero(a.size());
    return 0.0;
  }
  const double c = a.dot(b) / (na * nb);
  if (grad_a != nullptr) *grad_a = b / (na * nb) - (c / (na * na)) * a;
  return c;
}

double LossRandom(std::span<const Vector> clean,
                  std::span<const Vector> ref_trigger,
                  std::span<const Vector> ref_clean, const Vector& target,
                  RandomLossGrads* grads) {
  return SquaredCosineStream(clean, target,
                             grads ? &grads->clean : nullptr) +
         SquaredCosineStream(ref_trigger, target,
                             grads ? &grads->ref_trigger : nullptr) +
         SquaredCosineStream(ref_clean, target,
                             grads ? &grads->ref_clean : nullptr);
}

}  // namespace nsmark
