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

#include "nsmark/verify.h"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "desk_fixture.h"
#include "nsmark/attacks.h"
#include "nsmark/toymodel/losses.h"

namespace nsmark {
namespace {

using testing::DeskRun;
using testing::MakeDeskRun;

const DeskRun& Micro() {
  static const DeskRun run = MakeDeskRun(0, "micro");
  return run;
}

const DeskRun& Desk() {
  static const DeskRun run = MakeDeskRun(0);
  return run;
}

TEST(KeyTest, SameInputsGiveIdenticalKeyBytes) {
  const DeskRun& r = Micro();
  const WatermarkKey again =
      BuildKey(r.sig, r.embedded.extractor, r.embedded.model, r.pool.samples,
               r.preset.key, 1700000000);
  EXPECT_EQ(KeyToJson(again).dump(), KeyToJson(r.key).dump());
}

TEST(KeyTest, JsonRoundTripIsExact) {
  const DeskRun& r = Micro();
  const WatermarkKey back = KeyFromJson(KeyToJson(r.key));
  EXPECT_EQ(back.sig, r.key.sig);
  EXPECT_TRUE(back.null_space.data == r.key.null_space.data);
  EXPECT_EQ(back.null_space.rank, r.key.null_space.rank);
  EXPECT_TRUE(ParamsEqual(back.extractor.params(), r.key.extractor.params()));
  EXPECT_EQ(back.timestamp, r.key.timestamp);
  EXPECT_EQ(back.pool_size, r.key.pool_size);
  EXPECT_EQ(KeyToJson(back).dump(), KeyToJson(r.key).dump());
}

TEST(KeyTest, TamperedSpreadSignatureIsRejected) {
  Json doc = KeyToJson(Micro().key);
  doc["sig_sm"][0] = -doc["sig_sm"][0].get<int>();
  EXPECT_THROW(KeyFromJson(doc), Error);
}

TEST(KeyTest, NullSpaceAnnihilatesOwnOutputs) {
  const DeskRun& r = Micro();
  const auto samples = MaterializeVerificationSamples(
      r.sig, r.pool.samples, r.preset.key.q, r.trigger);
  const OutputMatrix a = ExtractKeyMatrix(r.embedded.model, samples);
  EXPECT_EQ(r.key.null_space.p(), r.preset.key.q - r.key.null_space.rank);
  EXPECT_LT((a.data * r.key.null_space.data).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(KeyTest, RequiresMoreSamplesThanDimensions) {
  const DeskRun& r = Micro();
  KeyParams p = r.preset.key;
  p.q = r.preset.encoder.output_dim;
  try {
    BuildKey(r.sig, r.embedded.extractor, r.embedded.model, r.pool.samples, p, 0);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidInput);
  }
}

TEST(KeyTest, RankCompleteOutputsCannotBuildKey) {
  // An encoder whose outputs span all q columns leaves nothing to store.
  const DeskRun& r = Micro();
  KeyParams p = r.preset.key;
  p.q = r.preset.encoder.output_dim + 1;
  const ToyEncoder wide(r.preset.encoder, 3);
  try {
    BuildKey(r.sig, r.embedded.extractor, wide, r.pool.samples, p, 0);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kKeyConstruction);
  }
}

TEST(KeyTest, VerificationSamplesAreDeterministicAndTriggered) {
  const DeskRun& r = Micro();
  const auto a = MaterializeVerificationSamples(r.sig, r.pool.samples, 10,
                                                r.trigger);
  const auto b = MaterializeVerificationSamples(r.sig, r.pool.samples, 10,
                                                r.trigger);
  ASSERT_EQ(a.size(), 10u);
  EXPECT_EQ(a, b);
  for (const auto& x : a) {
    int hits = 0;
    for (int32_t t : x.tokens) hits += t == r.trigger.trigger_token;
    EXPECT_GE(hits, r.trigger.insert_count);
  }
}

TEST(DecideTest, CoversEveryRegion) {
  const Thresholds t{0.6, 10.0};
  EXPECT_EQ(Decide(0.9, 100.0, t), Verdict::kOwned);
  EXPECT_EQ(Decide(0.9, 0.0, t), Verdict::kOwned);
  EXPECT_EQ(Decide(0.1, 1.0, t), Verdict::kOwnedViaNullSpace);
  EXPECT_EQ(Decide(0.1, 50.0, t), Verdict::kNotOwned);
  // Both comparisons are strict.
  EXPECT_EQ(Decide(0.6, 10.0, t), Verdict::kNotOwned);
  EXPECT_EQ(Decide(0.0, std::numeric_limits<double>::infinity(), t),
            Verdict::kNotOwned);
}

TEST(DecideTest, ThresholdsValidated) {
  EXPECT_THROW(ValidateThresholds({-0.1, 1.0}), Error);
  EXPECT_THROW(ValidateThresholds({1.5, 1.0}), Error);
  EXPECT_THROW(ValidateThresholds({0.5, -1.0}), Error);
  EXPECT_THROW(ValidateThresholds({0.0, 1.0}), Error);
  EXPECT_THROW(ValidateThresholds({0.5, 0.0}), Error);
  EXPECT_NO_THROW(ValidateThresholds({1.0, 1e-9}));
}

TEST(DecideTest, VerdictNames) {
  EXPECT_STREQ(VerdictName(Verdict::kOwned), "owned");
  EXPECT_STREQ(VerdictName(Verdict::kOwnedViaNullSpace), "owned-via-nullspace");
  EXPECT_STREQ(VerdictName(Verdict::kNotOwned), "not-owned");
}

TEST(VerifyTest, DimensionMismatchIsNotOwned) {
  const DeskRun& r = Micro();
  EncoderConfig other = r.preset.encoder;
  other.output_dim += 1;
  const VerdictReport v =
      Verify(r.key, ToyEncoder(other, 1), r.pool.samples, {});
  EXPECT_EQ(v.verdict, Verdict::kNotOwned);
  EXPECT_TRUE(std::isinf(v.nsmd));
  EXPECT_FALSE(v.diagnostic.empty());
}

TEST(VerifyTest, PoolSizeMustMatchKey) {
  const DeskRun& r = Micro();
  const std::vector<TokenSequence> small(r.pool.samples.begin(),
                                         r.pool.samples.begin() + 10);
  EXPECT_THROW(Verify(r.key, r.embedded.model, small, {}), Error);
}

TEST(VerifyTest, ReportJsonCarriesVerdict) {
  const DeskRun& r = Micro();
  const VerdictReport v = Verify(r.key, r.embedded.model, r.pool.samples, {});
  const Json j = ReportToJson(v);
  EXPECT_EQ(j["verdict"], VerdictName(v.verdict));
  EXPECT_EQ(j["key_timestamp"], 1700000000);
  EXPECT_FALSE(FormatReport(v).empty());
}

// Independent oracle: despread each chip from the averaged extractor output.
TEST(MatrixWerTest, MatchesHandDecoding) {
  const DeskRun& r = Micro();
  const auto samples = MaterializeVerificationSamples(
      r.sig, r.pool.samples, r.preset.key.q, r.trigger);
  const OutputMatrix a = ExtractKeyMatrix(r.embedded.model, samples);
  Vector mean = Vector::Zero(r.key.extractor.config().output_dim);
  for (int j = 0; j < a.samples(); ++j) {
    mean += r.key.extractor.Forward(a.data.col(j));
  }
  mean /= a.samples();
  const int k = r.sig_sm.k;
  int agree = 0;
  for (int i = 0; i < r.sig.n(); ++i) {
    int votes = 0;
    for (int c = 0; c < k; ++c) {
      const double ro = mean(i * k + c);
      int chip = 0;
      if (ro > 0.5 && ro < 1.5) chip = 1;
      if (ro < -0.5 && ro > -1.5) chip = -1;
      votes += chip * r.sig_sm.sm[i * k + c];
    }
    const int trit = votes > 0 ? 1 : (votes < 0 ? -1 : 0);
    agree += trit == r.sig[i];
  }
  EXPECT_DOUBLE_EQ(MatrixWer(r.key.extractor, a, r.sig, r.sig_sm),
                   static_cast<double>(agree) / r.sig.n());
}

TEST(CalibrationTest, KnownGapsGiveExpectedThresholds) {
  // Watermarked rows: WER 1, NSMD 0. Clean rows: WER 0.0075 on average.
  const std::vector<double> wer_wm = {1, 1, 1, 1};
  const std::vector<double> nsmd_wm = {0, 0, 0, 0};
  const std::vector<double> wer_clean = {0.0, 0.0, 0.03, 0.0};
  const std::vector<double> nsmd_clean = {60.95, 61.24, 87.88, 76.74};
  const Thresholds t = CalibrateThresholds(wer_wm, nsmd_wm, wer_clean, nsmd_clean);
  EXPECT_NEAR(t.wer, 0.6 * (1 - 0.0075), 1e-12);
  EXPECT_NEAR(t.nsmd, 0.6 * (60.95 + 61.24 + 87.88 + 76.74) / 4, 1e-12);
  EXPECT_NEAR(t.nsmd, 43.02, 0.01);
}

TEST(CalibrationTest, IdenticalPopulationsFail) {
  const std::vector<double> same = {0.5, 0.5, 0.5};
  try {
    CalibrateThresholds(same, same, same, same);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidInput);
  }
  const std::vector<double> two = {1, 1};
  EXPECT_THROW(CalibrateThresholds(two, two, two, two), Error);
}

TEST(OwnershipTest, EarlierTimestampWins) {
  WatermarkKey a, b;
  a.timestamp = 100;
  b.timestamp = 200;
  EXPECT_EQ(CompareOwnership(a, b), -1);
  EXPECT_EQ(CompareOwnership(b, a), 1);
  EXPECT_EQ(CompareOwnership(a, a), 0);
}

TEST(DeskVerifyTest, WatermarkedModelVerifiesItself) {
  const DeskRun& r = Desk();
  const VerdictReport v = Verify(r.key, r.embedded.model, r.pool.samples,
                                 r.preset.thresholds);
  EXPECT_EQ(v.wer, 1.0);
  EXPECT_LT(v.nsmd, 1e-3);
  EXPECT_EQ(v.verdict, Verdict::kOwned);
}

TEST(DeskVerifyTest, CleanModelIsNotOwned) {
  const DeskRun& r = Desk();
  const VerdictReport v = Verify(r.key, r.clean_model, r.pool.samples,
                                 r.preset.thresholds);
  EXPECT_LT(v.wer, r.preset.thresholds.wer);
  EXPECT_GT(v.nsmd, r.preset.thresholds.nsmd);
  EXPECT_EQ(v.verdict, Verdict::kNotOwned);
}

TEST(DeskVerifyTest, LinearAttackFallsBackToNullSpace) {
  const DeskRun& r = Desk();
  const AttackedModel attacked = LlLfea(AttackedModel(r.embedded.model), 21);
  const VerdictReport v =
      Verify(r.key, attacked, r.pool.samples, r.preset.thresholds);
  EXPECT_LT(v.nsmd, 1e-3);
  EXPECT_NE(v.verdict, Verdict::kNotOwned);
}

// Clean-set outputs should be close to orthogonal to the stored null space.
TEST(DeskVerifyTest, CleanOutputsAreNotInRowSpace) {
  const DeskRun& r = Desk();
  const OutputMatrix a =
      ExtractKeyMatrix(r.clean_model, MaterializeVerificationSamples(
                                          r.sig, r.pool.samples,
                                          r.preset.key.q, r.trigger));
  double sum_cos = 0.0;
  int count = 0;
  for (int i = 0; i < a.dim(); ++i) {
    const Vector row = a.data.row(i).transpose();
    if (row.norm() == 0.0) continue;
    for (int j = 0; j < r.key.null_space.p(); ++j) {
      const Vector col = r.key.null_space.data.col(j);
      sum_cos += std::abs(row.dot(col)) / (row.norm() * col.norm());
      ++count;
    }
  }
  ASSERT_GT(count, 0);
  EXPECT_LT(sum_cos / count, 0.2);
}

TEST(DeskVerifyTest, ReliabilityControls) {
  const DeskRun& r = Desk();
  const ReliabilityReport q = ReliabilitySuite(
      r.key, r.embedded.model, r.clean_model, r.pool.samples, 5, 4);
  EXPECT_EQ(q.draws, 4);
  // The correct matrix still matches N whatever signature decodes it.
  EXPECT_LT(q.wrong_sig.nsmd, 1e-3);
  EXPECT_GT(q.wrong_sig.wer, 0.2);
  EXPECT_LT(q.wrong_sig.wer, 0.8);
  EXPECT_GT(q.both_wrong.nsmd, r.preset.thresholds.nsmd);
  EXPECT_GT(q.random_null_space_nsmd, q.clean_model.nsmd);
  EXPECT_LT(q.small_null_space_nsmd, 1e-90);
  EXPECT_LT(q.wrong_extractor_wer, 0.5);
}

TEST(DeskVerifyTest, ExtractorSeparatesTriggerFromClean) {
  const DeskRun& r = Desk();
  const Vector target = Eigen::Map<const Eigen::Matrix<int8_t, -1, 1>>(
                            r.sig_sm.bits.data(), r.sig_sm.bits.size())
                            .cast<double>();
  const auto triggered = MakeTriggerSet(r.clean.samples, r.trigger, 31);
  double trig = 0.0, clean = 0.0;
  for (int i = 0; i < r.clean.size(); ++i) {
    trig += CosineSimilarity(
        r.key.extractor.Forward(r.embedded.model.Forward(triggered[i])), target);
    clean += CosineSimilarity(
        r.key.extractor.Forward(r.embedded.model.Forward(r.clean.samples[i])),
        target);
  }
  EXPECT_GE((trig - clean) / r.clean.size(), 0.5);
}

}  // namespace
}  // namespace nsmark
