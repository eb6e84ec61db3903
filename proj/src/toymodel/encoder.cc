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

#include "nsmark/toymodel/encoder.h"

#include <cmath>
#include <string>

namespace nsmark {
namespace {

Matrix GaussianMatrix(int rows, int cols, double stddev, Rng& rng) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = stddev * rng.Normal();
  }
  return m;
}

}  // namespace

EncoderParams EncoderParams::Zeros(const EncoderConfig& c) {
  EncoderParams p;
  p.embedding = Matrix::Zero(c.vocab_size, c.embed_dim);
  p.w1 = Matrix::Zero(c.hidden_dim, c.embed_dim);
  p.b1 = Vector::Zero(c.hidden_dim);
  p.w2 = Matrix::Zero(c.output_dim, c.hidden_dim);
  p.b2 = Vector::Zero(c.output_dim);
  p.head_w = Matrix::Zero(c.vocab_size, c.output_dim);
  p.head_b = Vector::Zero(c.vocab_size);
  return p;
}

void EncoderParams::SetZero() {
  ForEach([](const char*, auto& t) { t.setZero(); });
}

void EncoderParams::Axpy(double scale, const EncoderParams& o) {
  embedding += scale * o.embedding;
  w1 += scale * o.w1;
  b1 += scale * o.b1;
  w2 += scale * o.w2;
  b2 += scale * o.b2;
  head_w += scale * o.head_w;
  head_b += scale * o.head_b;
}

bool ParamsEqual(const EncoderParams& a, const EncoderParams& b) {
  return a.embedding == b.embedding && a.w1 == b.w1 && a.b1 == b.b1 &&
         a.w2 == b.w2 && a.b2 == b.b2 && a.head_w == b.head_w &&
         a.head_b == b.head_b;
}

ToyEncoder::ToyEncoder(const EncoderConfig& config, uint64_t seed)
    : config_(config) {
  Require(config.vocab_size >= 1 && config.embed_dim >= 1 &&
              config.hidden_dim >= 1 && config.output_dim >= 1,
          "encoder dimensions must be positive");
  Rng rng(seed);
  params_.embedding =
      GaussianMatrix(config.vocab_size, config.embed_dim, 1.0, rng);
  params_.w1 = GaussianMatrix(config.hidden_dim, config.embed_dim,
                              2.0 / std::sqrt(config.embed_dim), rng);
  params_.b1 = GaussianMatrix(config.hidden_dim, 1, 0.1, rng).col(0);
  params_.w2 = GaussianMatrix(config.output_dim, config.hidden_dim,
                              1.5 / std::sqrt(config.hidden_dim), rng);
  params_.b2 = GaussianMatrix(config.output_dim, 1, 0.1, rng).col(0);
  params_.head_w =
      GaussianMatrix(config.vocab_size, config.output_dim, 0.01, rng);
  params_.head_b = Vector::Zero(config.vocab_size);
}

ToyEncoder::ToyEncoder(const EncoderConfig& config, EncoderParams params)
    : config_(config), params_(std::move(params)) {
  const auto& p = params_;
  Require(p.embedding.rows() == config.vocab_size &&
              p.embedding.cols() == config.embed_dim &&
              p.w1.rows() == config.hidden_dim &&
              p.w1.cols() == config.embed_dim &&
              p.b1.size() == config.hidden_dim &&
              p.w2.rows() == config.output_dim &&
              p.w2.cols() == config.hidden_dim &&
              p.b2.size() == config.output_dim &&
              p.head_w.rows() == config.vocab_size &&
              p.head_w.cols() == config.output_dim &&
              p.head_b.size() == config.vocab_size,
          "encoder parameter shapes do not match the configuration");
}

void ToyEncoder::ValidateTokens(const TokenSequence& x) const {
  Require(!x.tokens.empty(), "token sequence must be non-empty");
  for (int32_t t : x.tokens) {
    if (t < 0 || t >= config_.vocab_size) {
      Fail(ErrorCode::kInvalidInput,
           "token id " + std::to_string(t) + " outside vocabulary of size " +
               std::to_string(config_.vocab_size));
    }
  }
}

Vector ToyEncoder::Forward(const TokenSequence& x) const {
  EncoderCache cache;
  return Forward(x, cache);
}

Vector ToyEncoder::Forward(const TokenSequence& x, EncoderCache& cache) const {
  ValidateTokens(x);
  cache.pooled = Vector::Zero(config_.embed_dim);
  for (int32_t t : x.tokens) cache.pooled += params_.embedding.row(t).transpose();
  cache.pooled /= static_cast<double>(x.size());
  cache.z1 = (params_.w1 * cache.pooled + params_.b1).array().tanh().matrix();
  cache.out = (params_.w2 * cache.z1 + params_.b2).array().tanh().matrix();
  return cache.out;
}

void ToyEncoder::Backward(const TokenSequence& x, const EncoderCache& cache,
                          const Vector& grad_out, EncoderParams& grad) const {
  const Vector g_a2 =
      grad_out.cwiseProduct((1.0 - cache.out.array().square()).matrix());
  grad.w2.noalias() += g_a2 * cache.z1.transpose();
  grad.b2 += g_a2;
  const Vector g_a1 = (params_.w2.transpose() * g_a2)
                          .cwiseProduct((1.0 - cache.z1.array().square()).matrix());
  grad.w1.noalias() += g_a1 * cache.pooled.transpose();
  grad.b1 += g_a1;
  const Vector g_pooled =
      params_.w1.transpose() * g_a1 / static_cast<double>(x.size());
  for (int32_t t : x.tokens) grad.embedding.row(t) += g_pooled.transpose();
}

double ToyEncoder::ReconstructionLoss(const TokenSequence& x, const Vector& out,
                                      EncoderParams* grad,
                                      Vector* grad_out) const {
  ValidateTokens(x);
  const Vector logits = params_.head_w * out + params_.head_b;
  const double max_logit = logits.maxCoeff();
  const Vector shifted = (logits.array() - max_logit).matrix();
  const double log_z = std::log(shifted.array().exp().sum());

  const double weight = 1.0 / static_cast<double>(x.size());
  double loss = 0.0;
  for (int32_t t : x.tokens) loss -= weight * (shifted[t] - log_z);

  if (grad != nullptr || grad_out != nullptr) {
    Vector g_logits = (shifted.array() - log_z).exp().matrix();  // softmax
    for (int32_t t : x.tokens) g_logits[t] -= weight;
    if (grad != nullptr) {
      grad->head_w.noalias() += g_logits * out.transpose();
      grad->head_b += g_logits;
    }
    if (grad_out != nullptr) *grad_out = params_.head_w.transpose() * g_logits;
  }
  return loss;
}

}  // namespace nsmark
