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

// Dual-loss alternating watermark embedding.
//
// Each minibatch first updates only the extractor on
//   L_Extractor = lambda1 * L_match + (1 - lambda1) * L_random
// and then only the encoder on
//   L_wm = lambda2 * L_match + (1 - lambda2) * L_0,
// with a frozen copy of the initial encoder serving as the reference model.

#ifndef NSMARK_TOYMODEL_EMBEDDING_H_
#define NSMARK_TOYMODEL_EMBEDDING_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nsmark/nullspace.h"
#include "nsmark/sigstream.h"
#include "nsmark/toymodel/corpus.h"
#include "nsmark/toymodel/encoder.h"
#include "nsmark/toymodel/extractor.h"

namespace nsmark {

struct TrainConfig {
  double lambda1 = 0.5;
  double lambda2 = 0.2;
  double lr_encoder = 1e-2;
  double lr_extractor = 1e-2;
  int batch_size = 4;
  int epochs = 10;
  uint64_t seed = 0;
  // Final full-set L_match below this counts as converged.
  double match_threshold = 0.1;
  int extractor_hidden1 = 128;
  int extractor_hidden2 = 96;
};

void ValidateTrainConfig(const TrainConfig& config);

struct EpochTrace {
  int epoch = 0;
  double l_match = 0.0;
  double l_random = 0.0;
  double l_0 = 0.0;
};

struct TrainingTrace {
  std::string optimizer = "sgd";
  double lr_encoder = 0.0;
  double lr_extractor = 0.0;
  std::vector<EpochTrace> epochs;
  bool converged = false;
  std::string status;
};

struct EmbedResult {
  ToyEncoder model;
  Extractor extractor;
  TrainingTrace trace;
};

// Extractor-side minibatch: outputs of the watermarked and reference models.
struct ExtractorBatch {
  std::vector<Vector> wm_trigger;
  std::vector<Vector> wm_clean;
  std::vector<Vector> ref_trigger;
  std::vector<Vector> ref_clean;
};

struct ExtractorLossValue {
  double match = 0.0;
  double random = 0.0;
  double total = 0.0;
};

ExtractorLossValue ExtractorLoss(const Extractor& extractor,
                                 const ExtractorBatch& batch,
                                 const Vector& target, double lambda1,
                                 ExtractorParams* grad = nullptr);

struct EncoderLossValue {
  double match = 0.0;
  double l_0 = 0.0;
  double total = 0.0;
};

// L_wm for one minibatch; L_match runs on the trigger samples through the
// (fixed) extractor and L_0 on the clean samples.
EncoderLossValue EncoderLoss(const ToyEncoder& model,
                             const Extractor& extractor,
                             std::span<const TokenSequence> trigger_samples,
                             std::span<const TokenSequence> clean_samples,
                             const Vector& target, double lambda2,
                             EncoderParams* grad = nullptr);

// Trigger set D_T: every clean sample with the trigger inserted, positions
// seeded per sample from `seed`.
std::vector<TokenSequence> MakeTriggerSet(
    std::span<const TokenSequence> clean, const TriggerSpec& trigger,
    uint64_t seed);

EmbedResult EmbedWatermark(const ToyEncoder& model, const TrainConfig& config,
                           const Corpus& clean, const TriggerSpec& trigger,
                           const SpreadSignature& sig_sm);

// Same schedule as EmbedWatermark with the watermark terms removed: only L_0
// updates the encoder. Produces the unwatermarked baseline models.
ToyEncoder TrainClean(const ToyEncoder& model, const TrainConfig& config,
                      const Corpus& clean, TrainingTrace* trace = nullptr);

// Column j is the model's output on samples[j].
OutputMatrix ExtractKeyMatrix(const OutputModel& model,
                              std::span<const TokenSequence> samples);

}  // namespace nsmark

#endif  // NSMARK_TOYMODEL_EMBEDDING_H_
