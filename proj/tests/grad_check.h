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

// Central finite-difference checks of the analytic training gradients on
// small random instances. Shared by the unit tests and the acceptance run.

#ifndef NSMARK_TESTS_GRAD_CHECK_H_
#define NSMARK_TESTS_GRAD_CHECK_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "nsmark/common.h"
#include "nsmark/toymodel/embedding.h"
#include "nsmark/toymodel/encoder.h"
#include "nsmark/toymodel/extractor.h"

namespace nsmark::testing {

struct MicroInstance {
  ToyEncoder model;
  ToyEncoder reference;
  Extractor extractor;
  std::vector<TokenSequence> trigger;
  std::vector<TokenSequence> clean;
  Vector target;
};

inline MicroInstance MakeMicroInstance(uint64_t seed) {
  Rng rng(seed);
  EncoderConfig ec{12, 4, 5, 4};
  ExtractorConfig xc{4, 6, 5, 6};
  MicroInstance m;
  m.reference = ToyEncoder(ec, MixSeed(seed, 1));
  // Start the trained copy slightly away from the reference so the two
  // streams differ.
  m.model = m.reference;
  m.model.mutable_params().ForEach([&](const char*, auto& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] += 0.1 * rng.Normal();
  });
  m.extractor = Extractor(xc, MixSeed(seed, 2));
  const int batch = 2 + static_cast<int>(rng.Below(3));
  for (int b = 0; b < batch; ++b) {
    TokenSequence x;
    const int len = 2 + static_cast<int>(rng.Below(5));
    for (int i = 0; i < len; ++i) {
      x.tokens.push_back(static_cast<int32_t>(rng.Below(11)));
    }
    m.clean.push_back(x);
    TokenSequence t = x;
    t.tokens.insert(t.tokens.begin() + rng.Below(len + 1), 11);
    t.tokens.push_back(11);
    m.trigger.push_back(t);
  }
  m.target.resize(xc.output_dim);
  for (Eigen::Index i = 0; i < m.target.size(); ++i) {
    m.target[i] = rng.Below(2) ? 1.0 : -1.0;
  }
  return m;
}

inline ExtractorBatch MakeBatch(const MicroInstance& m) {
  ExtractorBatch b;
  for (size_t i = 0; i < m.clean.size(); ++i) {
    b.wm_trigger.push_back(m.model.Forward(m.trigger[i]));
    b.wm_clean.push_back(m.model.Forward(m.clean[i]));
    b.ref_trigger.push_back(m.reference.Forward(m.trigger[i]));
    b.ref_clean.push_back(m.reference.Forward(m.clean[i]));
  }
  return b;
}

// Largest relative disagreement between `analytic` and central differences
// of `loss` over every parameter entry. Entries where both gradients are
// below `floor` are compared on an absolute scale.
template <typename Params>
double MaxRelativeError(Params& params, const Params& analytic,
                        const std::function<double()>& loss,
                        double h = 1e-6, double floor = 1e-5) {
  std::vector<const double*> expected;
  analytic.ForEach([&](const char*, const auto& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) expected.push_back(t.data() + i);
  });
  double worst = 0.0;
  size_t k = 0;
  params.ForEach([&](const char*, auto& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i, ++k) {
      double& x = t.data()[i];
      const double saved = x;
      x = saved + h;
      const double up = loss();
      x = saved - h;
      const double down = loss();
      x = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = *expected[k];
      const double scale = std::max({std::abs(a), std::abs(numeric), floor});
      worst = std::max(worst, std::abs(a - numeric) / scale);
    }
  });
  return worst;
}

struct GradCheckResult {
  double l_match_extractor = 0.0;
  double l_match_encoder = 0.0;
  double l_random = 0.0;
  double l_0 = 0.0;
};

inline GradCheckResult CheckGradients(uint64_t seed) {
  MicroInstance m = MakeMicroInstance(seed);
  const ExtractorBatch batch = MakeBatch(m);
  GradCheckResult r;

  auto extractor_check = [&](double lambda1) {
    ExtractorParams g = ExtractorParams::Zeros(m.extractor.config());
    ExtractorLoss(m.extractor, batch, m.target, lambda1, &g);
    return MaxRelativeError(m.extractor.mutable_params(), g, [&] {
      return ExtractorLoss(m.extractor, batch, m.target, lambda1).total;
    });
  };
  r.l_match_extractor = extractor_check(1.0);
  r.l_random = extractor_check(0.0);

  auto encoder_check = [&](double lambda2) {
    const std::vector<TokenSequence> none;
    const auto& trig = lambda2 > 0.0 ? m.trigger : none;
    const auto& clean = lambda2 < 1.0 ? m.clean : none;
    EncoderParams g = EncoderParams::Zeros(m.model.config());
    EncoderLoss(m.model, m.extractor, trig, clean, m.target, lambda2, &g);
    return MaxRelativeError(m.model.mutable_params(), g, [&] {
      return EncoderLoss(m.model, m.extractor, trig, clean, m.target, lambda2)
          .total;
    });
  };
  r.l_match_encoder = encoder_check(1.0);
  r.l_0 = encoder_check(0.0);
  return r;
}

}  // namespace nsmark::testing

#endif  // NSMARK_TESTS_GRAD_CHECK_H_
