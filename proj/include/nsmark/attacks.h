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

// The adversary suite: last-layer linear functionality equivalence attacks
// (LL-LFEA), recovery from them, pruning, fine-tuning and overwriting.

#ifndef NSMARK_ATTACKS_H_
#define NSMARK_ATTACKS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "nsmark/nullspace.h"
#include "nsmark/serialization.h"
#include "nsmark/toymodel/corpus.h"
#include "nsmark/toymodel/embedding.h"
#include "nsmark/toymodel/encoder.h"

namespace nsmark {

// An encoder whose every output vector is left-multiplied by a fixed matrix.
// Forward(x) = post_transform * base.Forward(x).
class AttackedModel : public OutputModel {
 public:
  AttackedModel() = default;
  // Identity transform.
  explicit AttackedModel(ToyEncoder base);
  AttackedModel(ToyEncoder base, Matrix post_transform);

  int output_dim() const override { return base_.output_dim(); }
  Vector Query(const TokenSequence& x) const override;

  const ToyEncoder& base() const { return base_; }
  const Matrix& post_transform() const { return post_transform_; }
  // Per-round attack matrices, oldest first. Empty for a recovered or
  // hand-built transform.
  const std::vector<AttackMatrix>& rounds() const { return rounds_; }

  // Returns a copy whose transform is `q * post_transform`.
  AttackedModel Then(const AttackMatrix& q) const;
  AttackedModel ThenMatrix(const Matrix& m) const;

  Checkpoint ToCheckpoint() const;
  static AttackedModel FromCheckpoint(const Checkpoint& checkpoint);

 private:
  ToyEncoder base_;
  Matrix post_transform_;
  std::vector<AttackMatrix> rounds_;
};

AttackedModel LlLfea(const AttackedModel& model, uint64_t seed);

// `rounds` independent attacks, round r seeded with MixSeed(seed, r).
// rounds = 0 leaves the model unchanged.
AttackedModel MultiLlLfea(const AttackedModel& model, int rounds,
                          uint64_t seed);

// Downstream first-layer weights that undo the attack: W' = W * Q^-1, so
// W' * (Q x) = W x.
Matrix CompensateHead(const Matrix& w, const Matrix& q);

struct RecoveryTransform {
  Matrix data;            // T, with T * A2 ~ A1
  double residual = 0.0;  // ||T A2 - A1||_F / ||A1||_F
  bool regularized = false;
};

// Least-squares estimate Q' = A2 A1^T (A1 A1^T)^-1 of the attack, returned as
// its inverse. A rank-deficient A1 A1^T gets a ridge term and sets
// `regularized`.
RecoveryTransform EstimateRecovery(const OutputMatrix& a1,
                                   const OutputMatrix& a2);

// Per-tensor magnitude pruning of the output path (embedding, w1, b1, w2,
// b2): the round(rate * size) smallest-magnitude entries of each tensor are
// zeroed, ties broken by position. The training-only reconstruction head is
// left alone.
ToyEncoder Prune(const ToyEncoder& model, double rate);

// Fraction of exactly-zero entries over the pruned tensors.
double ZeroFraction(const ToyEncoder& model);

struct FinetuneConfig {
  int epochs = 3;
  double lr = 4e-3;
  int batch_size = 4;
  uint64_t seed = 0;
};

struct FinetuneResult {
  ToyEncoder model;
  Matrix head_w;  // classes x output_dim
  Vector head_b;
  std::vector<double> epoch_loss;
  double accuracy = 0.0;  // on the training corpus after the last epoch
};

// Trains the encoder together with a fresh linear classification head on a
// labeled corpus (cross-entropy, plain SGD).
FinetuneResult Finetune(const ToyEncoder& model, const Corpus& task,
                        const FinetuneConfig& config);

// A second embedding with the attacker's own material on top of an already
// watermarked model.
EmbedResult Overwrite(const ToyEncoder& model, const TrainConfig& config,
                      const Corpus& clean, const TriggerSpec& trigger,
                      const SpreadSignature& sig_sm);

// Replayable attack description.
struct AttackDescriptor {
  std::string type = "identity";  // identity | ll-lfea | prune | finetune
  uint64_t seed = 0;
  int rounds = 1;
  double rate = 0.0;
  int epochs = 0;
};

Json AttackDescriptorToJson(const AttackDescriptor& attack);
AttackDescriptor AttackDescriptorFromJson(const Json& doc);

}  // namespace nsmark

#endif  // NSMARK_ATTACKS_H_
