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

#include "nsmark/toymodel/extractor.h"

#include <cmath>
#include <string>

namespace nsmark {
namespace {

Matrix Gaussian(int rows, int cols, double stddev, Rng& rng) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = stddev * rng.Normal();
  }
  return m;
}

Vector TanhDeriv(const Vector& activated) {
  return (1.0 - activated.array().square()).matrix();
}

}  // namespace

ExtractorParams ExtractorParams::Zeros(const ExtractorConfig& c) {
  ExtractorParams p;
  p.w1 = Matrix::Zero(c.hidden1, c.input_dim);
  p.b1 = Vector::Zero(c.hidden1);
  p.w2 = Matrix::Zero(c.hidden2, c.hidden1);
  p.b2 = Vector::Zero(c.hidden2);
  p.w3 = Matrix::Zero(c.output_dim, c.hidden2);
  p.b3 = Vector::Zero(c.output_dim);
  return p;
}

void ExtractorParams::SetZero() {
  ForEach([](const char*, auto& t) { t.setZero(); });
}

void ExtractorParams::Axpy(double scale, const ExtractorParams& o) {
  w1 += scale * o.w1;
  b1 += scale * o.b1;
  w2 += scale * o.w2;
  b2 += scale * o.b2;
  w3 += scale * o.w3;
  b3 += scale * o.b3;
}

bool ParamsEqual(const ExtractorParams& a, const ExtractorParams& b) {
  return a.w1 == b.w1 && a.b1 == b.b1 && a.w2 == b.w2 && a.b2 == b.b2 &&
         a.w3 == b.w3 && a.b3 == b.b3;
}

Extractor::Extractor(const ExtractorConfig& config, uint64_t seed)
    : config_(config) {
  Require(config.input_dim >= 1 && config.hidden1 >= 1 &&
              config.hidden2 >= 1 && config.output_dim >= 1,
          "extractor dimensions must be positive");
  Rng rng(seed);
  params_.w1 = Gaussian(config.hidden1, config.input_dim,
                        1.0 / std::sqrt(config.input_dim), rng);
  params_.b1 = Vector::Zero(config.hidden1);
  params_.w2 = Gaussian(config.hidden2, config.hidden1,
                        1.0 / std::sqrt(config.hidden1), rng);
  params_.b2 = Vector::Zero(config.hidden2);
  params_.w3 = Gaussian(config.output_dim, config.hidden2,
                        1.0 / std::sqrt(config.hidden2), rng);
  params_.b3 = Vector::Zero(config.output_dim);
}

Extractor::Extractor(const ExtractorConfig& config, ExtractorParams params)
    : config_(config), params_(std::move(params)) {
  const auto& p = params_;
  Require(p.w1.rows() == config.hidden1 && p.w1.cols() == config.input_dim &&
              p.b1.size() == config.hidden1 &&
              p.w2.rows() == config.hidden2 && p.w2.cols() == config.hidden1 &&
              p.b2.size() == config.hidden2 &&
              p.w3.rows() == config.output_dim &&
              p.w3.cols() == config.hidden2 &&
              p.b3.size() == config.output_dim,
          "extractor parameter shapes do not match the configuration");
}

Vector Extractor::Forward(const Vector& v) const {
  ExtractorCache cache;
  return Forward(v, cache);
}

Vector Extractor::Forward(const Vector& v, ExtractorCache& cache) const {
  Require(v.size() == config_.input_dim,
          "extractor input has dimension " + std::to_string(v.size()) +
              ", expected " + std::to_string(config_.input_dim));
  cache.input = v;
  cache.h1 = (params_.w1 * v + params_.b1).array().tanh().matrix();
  cache.h2 = (params_.w2 * cache.h1 + params_.b2).array().tanh().matrix();
  return params_.w3 * cache.h2 + params_.b3;
}

Vector Extractor::Backward(const ExtractorCache& cache, const Vector& grad_out,
                           ExtractorParams* grad) const {
  const Vector g_a2 =
      (params_.w3.transpose() * grad_out).cwiseProduct(TanhDeriv(cache.h2));
  const Vector g_a1 =
      (params_.w2.transpose() * g_a2).cwiseProduct(TanhDeriv(cache.h1));
  if (grad != nullptr) {
    grad->w3.noalias() += grad_out * cache.h2.transpose();
    grad->b3 += grad_out;
    grad->w2.noalias() += g_a2 * cache.h1.transpose();
    grad->b2 += g_a2;
    grad->w1.noalias() += g_a1 * cache.input.transpose();
    grad->b1 += g_a1;
  }
  return params_.w1.transpose() * g_a1;
}

}  // namespace nsmark
