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

#ifndef NSMARK_TOYMODEL_ENCODER_H_
#define NSMARK_TOYMODEL_ENCODER_H_

#include <cstdint>

#include "nsmark/common.h"
#include "nsmark/toymodel/corpus.h"

namespace nsmark {

// Black-box query surface: one output vector per token sequence. Verification
// only ever sees a model through this interface.
class OutputModel {
 public:
  virtual ~OutputModel() = default;
  virtual int output_dim() const = 0;
  virtual Vector Query(const TokenSequence& x) const = 0;
};

struct EncoderConfig {
  int32_t vocab_size = 1024;
  int embed_dim = 64;
  int hidden_dim = 96;
  int output_dim = 64;
};

// Parameter tensors, also used as the gradient accumulator.
struct EncoderParams {
  Matrix embedding;  // vocab x embed
  Matrix w1;         // hidden x embed
  Vector b1;
  Matrix w2;         // output x hidden
  Vector b2;
  // Bag-of-tokens reconstruction head used only by the training loss L_0.
  Matrix head_w;     // vocab x output
  Vector head_b;

  static EncoderParams Zeros(const EncoderConfig& config);

  template <typename F>
  void ForEach(F&& f) {
    f("embedding", embedding);
    f("w1", w1);
    f("b1", b1);
    f("w2", w2);
    f("b2", b2);
    f("head_w", head_w);
    f("head_b", head_b);
  }
  template <typename F>
  void ForEach(F&& f) const {
    const_cast<EncoderParams*>(this)->ForEach(
        [&](const char* name, const auto& t) { f(name, t); });
  }

  void SetZero();
  // this += scale * other
  void Axpy(double scale, const EncoderParams& other);
};

struct EncoderCache {
  Vector pooled;
  Vector z1;
  Vector out;
};

// Token embedding, mean pooling, then two tanh affine layers:
//   out = tanh(W2 tanh(W1 mean(emb(x)) + b1) + b2)
class ToyEncoder : public OutputModel {
 public:
  ToyEncoder() = default;
  ToyEncoder(const EncoderConfig& config, uint64_t seed);
  ToyEncoder(const EncoderConfig& config, EncoderParams params);

  int output_dim() const override { return config_.output_dim; }
  Vector Query(const TokenSequence& x) const override { return Forward(x); }

  Vector Forward(const TokenSequence& x) const;
  Vector Forward(const TokenSequence& x, EncoderCache& cache) const;

  // Accumulates d(loss)/d(params) into `grad` given d(loss)/d(out).
  void Backward(const TokenSequence& x, const EncoderCache& cache,
                const Vector& grad_out, EncoderParams& grad) const;

  // L_0 for one sample: cross-entropy between softmax(head(out)) and the
  // normalized token histogram of x. Accumulates head gradients into `grad`
  // and returns d(L_0)/d(out) in `grad_out` when non-null.
  double ReconstructionLoss(const TokenSequence& x, const Vector& out,
                            EncoderParams* grad, Vector* grad_out) const;

  const EncoderConfig& config() const { return config_; }
  const EncoderParams& params() const { return params_; }
  EncoderParams& mutable_params() { return params_; }

  void ValidateTokens(const TokenSequence& x) const;

 private:
  EncoderConfig config_;
  EncoderParams params_;
};

bool ParamsEqual(const EncoderParams& a, const EncoderParams& b);

}  // namespace nsmark

#endif  // NSMARK_TOYMODEL_ENCODER_H_
