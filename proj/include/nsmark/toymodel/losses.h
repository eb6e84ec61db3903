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

// Watermark embedding losses over extractor outputs.

#ifndef NSMARK_TOYMODEL_LOSSES_H_
#define NSMARK_TOYMODEL_LOSSES_H_

#include <cstdint>
#include <span>
#include <vector>

#include "nsmark/common.h"

namespace nsmark {

Vector ToVector(std::span<const int8_t> bits);

// Mean over the batch of the per-sample mean squared error against the
// spread signature. Per-sample gradients are written to `grads` if non-null.
double LossMatch(std::span<const Vector> outputs, const Vector& target,
                 std::vector<Vector>* grads = nullptr);

// Cosine similarity; 0 (with zero gradient) when either vector has zero norm.
double CosineSimilarity(const Vector& a, const Vector& b,
                        Vector* grad_a = nullptr);

struct RandomLossGrads {
  std::vector<Vector> clean;
  std::vector<Vector> ref_trigger;
  std::vector<Vector> ref_clean;
};

// Sum over the three streams (watermarked model on clean inputs, reference
// model on trigger inputs, reference model on clean inputs) of the stream
// mean of squared cosine similarity to the spread signature.
double LossRandom(std::span<const Vector> clean,
                  std::span<const Vector> ref_trigger,
                  std::span<const Vector> ref_clean, const Vector& target,
                  RandomLossGrads* grads = nullptr);

}  // namespace nsmark

#endif  // NSMARK_TOYMODEL_LOSSES_H_
