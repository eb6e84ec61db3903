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

#ifndef NSMARK_TOYMODEL_EXTRACTOR_H_
#define NSMARK_TOYMODEL_EXTRACTOR_H_

#include <cstdint>

#include "nsmark/common.h"

namespace nsmark {

struct ExtractorConfig {
  int input_dim = 64;
  int hidden1 = 128;
  int hidden2 = 96;
  int output_dim = 48;  // k * n
};

struct ExtractorParams {
  Matrix w1;  // hidden1 x input
  Vector b1;
  Matrix w2;  // hidden2 x hidden1
  Vector b2;
  Matrix w3;  // output x hidden2
  Vector b3;

  static ExtractorParams Zeros(const ExtractorConfig& config);

  template <typename F>
  void ForEach(F&& f) {
    f("w1", w1);
    f("b1", b1);
    f("w2", w2);
    f("b2", b2);
    f("w3", w3);
    f("b3", b3);
  }
  template <typename F>
  void ForEach(F&& f) const {
    const_cast<ExtractorParams*>(this)->ForEach(
        [&](const char* name, const auto& t) { f(name, t); });
  }

  void SetZero();
  void Axpy(double scale, const ExtractorParams& other);
};

struct ExtractorCache {
  Vector input;
  Vector h1;
  Vector h2;
};

// Three affine layers, tanh between them, linear output:
//   E(v) = W3 tanh(W2 tanh(W1 v + b1) + b2) + b3
class Extractor {
 public:
  Extractor() = default;
  Extractor(const ExtractorConfig& config, uint64_t seed);
  Extractor(const ExtractorConfig& config, ExtractorParams params);

  Vector Forward(const Vector& v) const;
  Vector Forward(const Vector& v, ExtractorCache& cache) const;

  // Accumulates parameter gradients into `grad` (when non-null) and returns
  // d(loss)/d(input) given d(loss)/d(output).
  Vector Backward(const ExtractorCache& cache, const Vector& grad_out,
                  ExtractorParams* grad) const;

  const ExtractorConfig& config() const { return config_; }
  const ExtractorParams& params() const { return params_; }
  ExtractorParams& mutable_params() { return params_; }

 private:
  ExtractorConfig config_;
  ExtractorParams params_;
};

bool ParamsEqual(const ExtractorParams& a, const ExtractorParams& b);

}  // namespace nsmark

#endif  // NSMARK_TOYMODEL_EXTRACTOR_H_
