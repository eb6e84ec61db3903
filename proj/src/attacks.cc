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

#include "nsmark/attacks.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace nsmark {
namespace {

constexpr uint64_t kHeadInitTag = 1;
constexpr uint64_t kFinetuneShuffleTag = 2;
constexpr double kRidge = 1e-10;

template <typename T>
void PruneTensor(T& t, double rate) {
  const Eigen::Index size = t.size();
  const auto count = static_cast<Eigen::Index>(
      std::llround(rate * static_cast<double>(size)));
  if (count == 0) return;
  std::vector<Eigen::Index> order(static_cast<size_t>(size));
  std::iota(order.begin(), order.end(), 0);
  double* data = t.data();
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) {
                     return std::abs(data[a]) < std::abs(data[b]);
                   });
  for (Eigen::Index i = 0; i < count; ++i) data[order[i]] = 0.0;
}

// Visits the tensors that determine the model's output.
template <typename Params, typename F>
void ForEachOutputTensor(Params& p, F&& f) {
  f(p.embedding);
  f(p.w1);
  f(p.b1);
  f(p.w2);
  f(p.b2);
}

Vector Softmax(const Vector& logits) {
  const Vector e = (logits.array() - logits.maxCoeff()).exp().matrix();
  return e / e.sum();
}

}  // namespace

AttackedModel::AttackedModel(ToyEncoder base)
    : base_(std::move(base)),
      post_transform_(Matrix::Identity(base_.output_dim(),
                                       base_.output_dim())) {}

AttackedModel::AttackedModel(ToyEncoder base, Matrix post_transform)
    : base_(std::move(base)), post_transform_(std::move(post_transform)) {
  Require(post_transform_.rows() == base_.output_dim() &&
              post_transform_.cols() == base_.output_dim(),
          "post transform must be d x d for output dimension " +
              std::to_string(base_.output_dim()));
}

Vector AttackedModel::Query(const TokenSequence& x) const {
  return post_transform_ * base_.Forward(x);
}

AttackedModel AttackedModel::Then(const AttackMatrix& q) const {
  AttackedModel out = ThenMatrix(q.data);
  out.rounds_ = rounds_;
  out.rounds_.push_back(q);
  return out;
}

AttackedModel AttackedModel::ThenMatrix(const Matrix& m) const {
  Require(m.rows() == output_dim() && m.cols() == output_dim(),
          "transform must be d x d");
  return AttackedModel(base_, m * post_transform_);
}

Checkpoint AttackedModel::ToCheckpoint() const {
  Checkpoint c{base_, std::nullopt};
  if (!post_transform_.isIdentity(0.0)) c.post_transform = post_transform_;
  return c;
}

AttackedModel AttackedModel::FromCheckpoint(const Checkpoint& checkpoint) {
  if (!checkpoint.post_transform.has_value()) {
    return AttackedModel(checkpoint.model);
  }
  return AttackedModel(checkpoint.model, *checkpoint.post_transform);
}

AttackedModel LlLfea(const AttackedModel& model, uint64_t seed) {
  return model.Then(GenerateQ(model.output_dim(), seed));
}

AttackedModel MultiLlLfea(const AttackedModel& model, int rounds,
                          uint64_t seed) {
  Require(rounds >= 0, "rounds must be >= 0");
  AttackedModel out = model;
  for (int r = 0; r < rounds; ++r) {
    out = LlLfea(out, MixSeed(seed, static_cast<uint64_t>(r)));
  }
  return out;
}

Matrix CompensateHead(const Matrix& w, const Matrix& q) {
  Require(q.rows() == q.cols() && w.cols() == q.rows(),
          "head and attack matrix dimensions disagree");
  // W Q^-1 = (Q^-T W^T)^T
  const Matrix qt = q.transpose();
  const Matrix wt = w.transpose();
  return qt.fullPivLu().solve(wt).transpose();
}

RecoveryTransform EstimateRecovery(const OutputMatrix& a1,
                                   const OutputMatrix& a2) {
  Require(a1.dim() == a2.dim() && a1.samples() == a2.samples(),
          "pre- and post-attack matrices must have the same shape");
  Require(AllFinite(a1.data) && AllFinite(a2.data),
          "output matrices must be finite");
  const Matrix& m1 = a1.data;
  const Matrix& m2 = a2.data;
  RecoveryTransform out;
  Matrix gram = m1 * m1.transpose();
  if (NumericalRank(gram) < gram.rows()) {
    out.regularized = true;
    const double scale = std::max(gram.diagonal().maxCoeff(), 1.0);
    gram += kRidge * scale * Matrix::Identity(gram.rows(), gram.cols());
  }
  const Matrix cross = m2 * m1.transpose();
  // Q' = cross * gram^-1, solved as gram^T Q'^T = cross^T.
  const Matrix gram_t = gram.transpose();
  const Matrix cross_t = cross.transpose();
  const Matrix q_est = gram_t.ldlt().solve(cross_t).transpose();
  Eigen::FullPivLU<Matrix> lu(q_est);
  if (!lu.isInvertible()) {
    out.regularized = true;
    out.data = q_est.completeOrthogonalDecomposition().pseudoInverse();
  } else {
    out.data = lu.inverse();
  }
  if (!AllFinite(out.data)) {
    Fail(ErrorCode::kNumerical, "recovery transform is not finite");
  }
  const double denom = m1.norm();
  out.residual = denom > 0.0 ? (out.data * m2 - m1).norm() / denom
                             : (out.data * m2 - m1).norm();
  return out;
}

ToyEncoder Prune(const ToyEncoder& model, double rate) {
  Require(rate >= 0.0 && rate <= 1.0, "pruning rate must lie in [0, 1]");
  ToyEncoder out = model;
  ForEachOutputTensor(out.mutable_params(),
                      [&](auto& t) { PruneTensor(t, rate); });
  return out;
}

double ZeroFraction(const ToyEncoder& model) {
  double zeros = 0.0;
  double total = 0.0;
  ForEachOutputTensor(model.params(), [&](const auto& t) {
    zeros += static_cast<double>((t.array() == 0.0).count());
    total += static_cast<double>(t.size());
  });
  return total > 0.0 ? zeros / total : 0.0;
}

FinetuneResult Finetune(const ToyEncoder& model, const Corpus& task,
                        const FinetuneConfig& config) {
  Require(config.epochs >= 0, "epochs must be >= 0");
  Require(config.lr > 0.0 && config.batch_size >= 1,
          "fine-tuning needs a positive learning rate and batch size");
  Require(task.size() > 0 && task.labels.size() == task.samples.size(),
          "fine-tuning needs a labeled, non-empty corpus");
  const int classes =
      *std::max_element(task.labels.begin(), task.labels.end()) + 1;
  Require(*std::min_element(task.labels.begin(), task.labels.end()) >= 0,
          "labels must be non-negative");

  const int d = model.output_dim();
  FinetuneResult result{model, Matrix(classes, d), Vector::Zero(classes), {},
                        0.0};
  Rng init(MixSeed(config.seed, kHeadInitTag));
  for (int i = 0; i < classes; ++i) {
    for (int j = 0; j < d; ++j) result.head_w(i, j) = 0.01 * init.Normal();
  }

  std::vector<int> order(task.samples.size());
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle(MixSeed(config.seed, kFinetuneShuffleTag));
  EncoderParams grad = EncoderParams::Zeros(model.config());
  Matrix g_head_w(classes, d);
  Vector g_head_b(classes);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (int i = static_cast<int>(order.size()) - 1; i > 0; --i) {
      std::swap(order[i], order[shuffle.Below(i + 1)]);
    }
    double epoch_loss = 0.0;
    for (size_t start = 0; start < order.size(); start += config.batch_size) {
      const size_t stop = std::min(order.size(), start + config.batch_size);
      const double scale = 1.0 / static_cast<double>(stop - start);
      grad.SetZero();
      g_head_w.setZero();
      g_head_b.setZero();
      for (size_t b = start; b < stop; ++b) {
        const TokenSequence& x = task.samples[order[b]];
        const int label = task.labels[order[b]];
        EncoderCache cache;
        const Vector v = result.model.Forward(x, cache);
        Vector g_logits = Softmax(result.head_w * v + result.head_b);
        epoch_loss -= std::log(std::max(g_logits[label], 1e-300));
        g_logits[label] -= 1.0;
        g_logits *= scale;
        g_head_w.noalias() += g_logits * v.transpose();
        g_head_b += g_logits;
        result.model.Backward(x, cache, result.head_w.transpose() * g_logits,
                              grad);
      }
      result.model.mutable_params().Axpy(-config.lr, grad);
      result.head_w -= config.lr * g_head_w;
      result.head_b -= config.lr * g_head_b;
    }
    epoch_loss /= static_cast<double>(task.size());
    if (!std::isfinite(epoch_loss)) {
      Fail(ErrorCode::kNumerical, "fine-tuning diverged at epoch " +
                                      std::to_string(epoch));
    }
    result.epoch_loss.push_back(epoch_loss);
  }

  int correct = 0;
  for (int i = 0; i < task.size(); ++i) {
    const Vector logits =
        result.head_w * result.model.Forward(task.samples[i]) + result.head_b;
    Eigen::Index arg = 0;
    logits.maxCoeff(&arg);
    if (arg == task.labels[i]) ++correct;
  }
  result.accuracy = static_cast<double>(correct) / task.size();
  return result;
}

EmbedResult Overwrite(const ToyEncoder& model, const TrainConfig& config,
                      const Corpus& clean, const TriggerSpec& trigger,
                      const SpreadSignature& sig_sm) {
  return EmbedWatermark(model, config, clean, trigger, sig_sm);
}

Json AttackDescriptorToJson(const AttackDescriptor& a) {
  return Json{{"type", a.type},
              {"seed", a.seed},
              {"rounds", a.rounds},
              {"rate", a.rate},
              {"epochs", a.epochs}};
}

AttackDescriptor AttackDescriptorFromJson(const Json& doc) {
  AttackDescriptor a;
  a.type = Field(doc, "type").get<std::string>();
  a.seed = doc.value("seed", uint64_t{0});
  a.rounds = doc.value("rounds", 1);
  a.rate = doc.value("rate", 0.0);
  a.epochs = doc.value("epochs", 0);
  Require(a.type == "identity" || a.type == "ll-lfea" || a.type == "prune" ||
              a.type == "finetune",
          "unknown attack type '" + a.type + "'");
  return a;
}

}  // namespace nsmark
