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

#include "nsmark/toymodel/embedding.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nsmark/toymodel/losses.h"

namespace nsmark {
namespace {

constexpr uint64_t kExtractorInitTag = 1;
constexpr uint64_t kShuffleTag = 2;
constexpr uint64_t kTriggerSetTag = 3;

void Shuffle(std::vector<int>& order, Rng& rng) {
  for (int i = static_cast<int>(order.size()) - 1; i > 0; --i) {
    std::swap(order[i], order[rng.Below(i + 1)]);
  }
}

std::vector<Vector> ForwardAll(const ToyEncoder& model,
                               std::span<const TokenSequence> samples) {
  std::vector<Vector> out;
  out.reserve(samples.size());
  for (const auto& x : samples) out.push_back(model.Forward(x));
  return out;
}

template <typename T>
std::vector<T> Gather(const std::vector<T>& items, std::span<const int> idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(items[i]);
  return out;
}

bool IsFinite(double x) { return std::isfinite(x); }

struct FullSetLosses {
  double match = 0.0;
  double random = 0.0;
  double l_0 = 0.0;
};

FullSetLosses EvaluateFullSet(const ToyEncoder& model,
                              const Extractor* extractor,
                              const std::vector<TokenSequence>& clean,
                              const std::vector<TokenSequence>& trigger,
                              const std::vector<Vector>& ref_clean,
                              const std::vector<Vector>& ref_trigger,
                              const Vector& target) {
  FullSetLosses out;
  std::vector<Vector> wm_clean = ForwardAll(model, clean);
  for (size_t i = 0; i < clean.size(); ++i) {
    out.l_0 += model.ReconstructionLoss(clean[i], wm_clean[i], nullptr, nullptr);
  }
  out.l_0 /= static_cast<double>(clean.size());
  if (extractor == nullptr) return out;

  auto map = [&](const std::vector<Vector>& vs) {
    std::vector<Vector> r;
    r.reserve(vs.size());
    for (const auto& v : vs) r.push_back(extractor->Forward(v));
    return r;
  };
  const auto e_trig = map(ForwardAll(model, trigger));
  out.match = LossMatch(e_trig, target);
  out.random = LossRandom(map(wm_clean), map(ref_trigger), map(ref_clean),
                          target);
  return out;
}

// Shared loop. With `extractor` null only L_0 trains the encoder.
void RunTraining(ToyEncoder& model, Extractor* extractor,
                 const TrainConfig& config, const Corpus& clean_corpus,
                 const TriggerSpec* trigger, const Vector& target,
                 TrainingTrace& trace) {
  const std::vector<TokenSequence>& clean = clean_corpus.samples;
  const ToyEncoder reference = model;  // frozen f_ref
  std::vector<TokenSequence> trigger_set;
  std::vector<Vector> ref_clean, ref_trigger;
  if (extractor != nullptr) {
    trigger_set = MakeTriggerSet(clean, *trigger,
                                 MixSeed(config.seed, kTriggerSetTag));
    ref_clean = ForwardAll(reference, clean);
    ref_trigger = ForwardAll(reference, trigger_set);
  }

  trace.lr_encoder = config.lr_encoder;
  trace.lr_extractor = config.lr_extractor;
  trace.epochs.clear();

  std::vector<int> order(clean.size());
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(MixSeed(config.seed, kShuffleTag));
  EncoderParams encoder_grad = EncoderParams::Zeros(model.config());
  ExtractorParams extractor_grad;
  if (extractor != nullptr) {
    extractor_grad = ExtractorParams::Zeros(extractor->config());
  }
  const double lambda2 = extractor != nullptr ? config.lambda2 : 0.0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Shuffle(order, shuffle_rng);
    for (size_t start = 0; start < order.size();
         start += config.batch_size) {
      const size_t stop = std::min(order.size(), start + config.batch_size);
      std::span<const int> idx(order.data() + start, stop - start);
      const auto batch_clean = Gather(clean, idx);

      if (extractor != nullptr) {
        const auto batch_trigger = Gather(trigger_set, idx);
        // (a) extractor step; the encoder is untouched.
        ExtractorBatch batch;
        batch.wm_trigger = ForwardAll(model, batch_trigger);
        batch.wm_clean = ForwardAll(model, batch_clean);
        batch.ref_trigger = Gather(ref_trigger, idx);
        batch.ref_clean = Gather(ref_clean, idx);
        extractor_grad.SetZero();
        const auto e_loss = ExtractorLoss(*extractor, batch, target,
                                          config.lambda1, &extractor_grad);
        if (!IsFinite(e_loss.total)) {
          trace.status = "diverged: extractor loss is not finite at epoch " +
                         std::to_string(epoch);
          Fail(ErrorCode::kNumerical, trace.status);
        }
        extractor->mutable_params().Axpy(-config.lr_extractor,
                                         extractor_grad);

        // (b) encoder step; the extractor is untouched.
        encoder_grad.SetZero();
        const auto f_loss = EncoderLoss(model, *extractor, batch_trigger,
                                        batch_clean, target, lambda2,
                                        &encoder_grad);
        if (!IsFinite(f_loss.total)) {
          trace.status = "diverged: encoder loss is not finite at epoch " +
                         std::to_string(epoch);
          Fail(ErrorCode::kNumerical, trace.status);
        }
        model.mutable_params().Axpy(-config.lr_encoder, encoder_grad);
      } else {
        encoder_grad.SetZero();
        const auto f_loss = EncoderLoss(model, Extractor(), {}, batch_clean,
                                        target, 0.0, &encoder_grad);
        if (!IsFinite(f_loss.total)) {
          trace.status = "diverged: L_0 is not finite at epoch " +
                         std::to_string(epoch);
          Fail(ErrorCode::kNumerical, trace.status);
        }
        model.mutable_params().Axpy(-config.lr_encoder, encoder_grad);
      }
    }
    const FullSetLosses full =
        EvaluateFullSet(model, extractor, clean, trigger_set, ref_clean,
                        ref_trigger, target);
    trace.epochs.push_back({epoch, full.match, full.random, full.l_0});
  }

  if (extractor == nullptr) {
    trace.converged = true;
    trace.status = "clean training finished";
    return;
  }
  const double final_match =
      trace.epochs.empty()
          ? EvaluateFullSet(model, extractor, clean, trigger_set, ref_clean,
                            ref_trigger, target)
                .match
          : trace.epochs.back().l_match;
  trace.converged = final_match < config.match_threshold;
  trace.status = trace.converged
                     ? "converged"
                     : "not converged: final L_match " +
                           std::to_string(final_match) + " >= threshold " +
                           std::to_string(config.match_threshold);
}

}  // namespace

void ValidateTrainConfig(const TrainConfig& c) {
  Require(c.lambda1 >= 0.0 && c.lambda1 <= 1.0, "lambda1 must lie in [0, 1]");
  Require(c.lambda2 >= 0.0 && c.lambda2 <= 1.0, "lambda2 must lie in [0, 1]");
  Require(c.lr_encoder > 0.0 && c.lr_extractor > 0.0,
          "learning rates must be positive");
  Require(c.batch_size >= 1, "batch size must be >= 1");
  Require(c.epochs >= 0, "epochs must be >= 0");
  Require(c.extractor_hidden1 >= 1 && c.extractor_hidden2 >= 1,
          "extractor hidden sizes must be positive");
}

ExtractorLossValue ExtractorLoss(const Extractor& extractor,
                                 const ExtractorBatch& batch,
                                 const Vector& target, double lambda1,
                                 ExtractorParams* grad) {
  const bool want_grad = grad != nullptr;
  auto forward = [&](const std::vector<Vector>& inputs,
                     std::vector<ExtractorCache>& caches) {
    std::vector<Vector> out(inputs.size());
    caches.resize(inputs.size());
    for (size_t i = 0; i < inputs.size(); ++i) {
      out[i] = extractor.Forward(inputs[i], caches[i]);
    }
    return out;
  };
  std::vector<ExtractorCache> c_trig, c_clean, c_ref_trig, c_ref_clean;
  const auto o_trig = forward(batch.wm_trigger, c_trig);
  const auto o_clean = forward(batch.wm_clean, c_clean);
  const auto o_ref_trig = forward(batch.ref_trigger, c_ref_trig);
  const auto o_ref_clean = forward(batch.ref_clean, c_ref_clean);

  std::vector<Vector> g_match;
  RandomLossGrads g_random;
  ExtractorLossValue value;
  value.match = LossMatch(o_trig, target, want_grad ? &g_match : nullptr);
  value.random = LossRandom(o_clean, o_ref_trig, o_ref_clean, target,
                            want_grad ? &g_random : nullptr);
  value.total = lambda1 * value.match + (1.0 - lambda1) * value.random;
  if (!want_grad) return value;

  auto backward = [&](const std::vector<ExtractorCache>& caches,
                      const std::vector<Vector>& grads, double scale) {
    for (size_t i = 0; i < caches.size(); ++i) {
      extractor.Backward(caches[i], scale * grads[i], grad);
    }
  };
  backward(c_trig, g_match, lambda1);
  backward(c_clean, g_random.clean, 1.0 - lambda1);
  backward(c_ref_trig, g_random.ref_trigger, 1.0 - lambda1);
  backward(c_ref_clean, g_random.ref_clean, 1.0 - lambda1);
  return value;
}

EncoderLossValue EncoderLoss(const ToyEncoder& model,
                             const Extractor& extractor,
                             std::span<const TokenSequence> trigger_samples,
                             std::span<const TokenSequence> clean_samples,
                             const Vector& target, double lambda2,
                             EncoderParams* grad) {
  EncoderLossValue value;
  if (lambda2 > 0.0 && !trigger_samples.empty()) {
    std::vector<EncoderCache> f_caches(trigger_samples.size());
    std::vector<ExtractorCache> e_caches(trigger_samples.size());
    std::vector<Vector> outputs(trigger_samples.size());
    for (size_t i = 0; i < trigger_samples.size(); ++i) {
      const Vector v = model.Forward(trigger_samples[i], f_caches[i]);
      outputs[i] = extractor.Forward(v, e_caches[i]);
    }
    std::vector<Vector> g_match;
    value.match = LossMatch(outputs, target, grad ? &g_match : nullptr);
    if (grad != nullptr) {
      for (size_t i = 0; i < trigger_samples.size(); ++i) {
        const Vector g_v =
            extractor.Backward(e_caches[i], lambda2 * g_match[i], nullptr);
        model.Backward(trigger_samples[i], f_caches[i], g_v, *grad);
      }
    }
  }
  if (!clean_samples.empty()) {
    const double scale = 1.0 / static_cast<double>(clean_samples.size());
    for (const auto& x : clean_samples) {
      EncoderCache cache;
      const Vector v = model.Forward(x, cache);
      if (grad == nullptr) {
        value.l_0 += scale * model.ReconstructionLoss(x, v, nullptr, nullptr);
        continue;
      }
      // Head gradients are scaled after the fact through a scratch buffer.
      EncoderParams head_grad;
      head_grad.head_w = Matrix::Zero(grad->head_w.rows(), grad->head_w.cols());
      head_grad.head_b = Vector::Zero(grad->head_b.size());
      Vector g_v;
      value.l_0 += scale * model.ReconstructionLoss(x, v, &head_grad, &g_v);
      const double w = (1.0 - lambda2) * scale;
      grad->head_w += w * head_grad.head_w;
      grad->head_b += w * head_grad.head_b;
      model.Backward(x, cache, w * g_v, *grad);
    }
  }
  value.total = lambda2 * value.match + (1.0 - lambda2) * value.l_0;
  return value;
}

std::vector<TokenSequence> MakeTriggerSet(
    std::span<const TokenSequence> clean, const TriggerSpec& trigger,
    uint64_t seed) {
  std::vector<TokenSequence> out;
  out.reserve(clean.size());
  for (size_t i = 0; i < clean.size(); ++i) {
    out.push_back(InsertTrigger(clean[i], trigger, MixSeed(seed, i)));
  }
  return out;
}

EmbedResult EmbedWatermark(const ToyEncoder& model, const TrainConfig& config,
                           const Corpus& clean, const TriggerSpec& trigger,
                           const SpreadSignature& sig_sm) {
  ValidateTrainConfig(config);
  Require(clean.size() > 0, "clean corpus must be non-empty");
  Require(!sig_sm.bits.empty(), "spread signature must be non-empty");
  ExtractorConfig ecfg;
  ecfg.input_dim = model.output_dim();
  ecfg.hidden1 = config.extractor_hidden1;
  ecfg.hidden2 = config.extractor_hidden2;
  ecfg.output_dim = static_cast<int>(sig_sm.bits.size());

  EmbedResult result{model, Extractor(ecfg, MixSeed(config.seed,
                                                    kExtractorInitTag)),
                     {}};
  RunTraining(result.model, &result.extractor, config, clean, &trigger,
              ToVector(sig_sm.bits), result.trace);
  return result;
}

ToyEncoder TrainClean(const ToyEncoder& model, const TrainConfig& config,
                      const Corpus& clean, TrainingTrace* trace) {
  ValidateTrainConfig(config);
  Require(clean.size() > 0, "clean corpus must be non-empty");
  ToyEncoder out = model;
  TrainingTrace local;
  RunTraining(out, nullptr, config, clean, nullptr, Vector(), local);
  if (trace != nullptr) *trace = std::move(local);
  return out;
}

OutputMatrix ExtractKeyMatrix(const OutputModel& model,
                              std::span<const TokenSequence> samples) {
  Require(!samples.empty(), "need at least one sample");
  OutputMatrix a;
  a.data.resize(model.output_dim(), static_cast<Eigen::Index>(samples.size()));
  for (size_t j = 0; j < samples.size(); ++j) {
    const Vector v = model.Query(samples[j]);
    Require(v.size() == model.output_dim(),
            "model returned an output of unexpected dimension");
    a.data.col(static_cast<Eigen::Index>(j)) = v;
  }
  return a;
}

}  // namespace nsmark
