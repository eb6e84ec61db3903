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

#include "nsmark/sigstream.h"

#include <gtest/gtest.h>

#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include "nsmark/common.h"

namespace nsmark {
namespace {

std::string Hex(const Digest& d) {
  std::string out;
  char buf[3];
  for (uint8_t b : d) {
    std::snprintf(buf, sizeof(buf), "%02x", b);
    out += buf;
  }
  return out;
}

Signature RandomSig(int n, Rng& rng) {
  std::vector<int8_t> bits(n);
  for (auto& b : bits) b = rng.Below(2) ? 1 : -1;
  return Signature(bits);
}

// Golden values below were produced by an independent implementation of the
// same construction (Python hashlib), not by this library.
const std::vector<int8_t> kGoldenSig = {-1, 1, 1, -1, 1, -1, -1, 1,
                                        -1, 1, 1, -1, -1, 1, 1,  1};

TEST(Sha256Test, MatchesPublishedVectors) {
  EXPECT_EQ(Hex(Sha256(std::string("abc"))),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(Hex(Sha256(std::string(""))),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(DigestModTest, BigEndianReduction) {
  Digest d{};
  d[31] = 7;
  EXPECT_EQ(DigestMod(d, 5), 2u);
  d[30] = 1;  // value 263
  EXPECT_EQ(DigestMod(d, 1000), 263u);
  Digest ones;
  ones.fill(0xff);  // 2^256 - 1; 2^256 = 1 (mod 3) so the value is 0 mod 3
  EXPECT_EQ(DigestMod(ones, 3), 0u);
  EXPECT_EQ(DigestMod(ones, 1), 0u);
}

TEST(SignTest, MatchesIndependentImplementation) {
  const Signature sig = Sign({"A"}, {"K"}, 16);
  EXPECT_EQ(sig.bits(), kGoldenSig);
}

TEST(SignTest, Deterministic) {
  EXPECT_EQ(Sign({"A"}, {"K"}, 16), Sign({"A"}, {"K"}, 16));
  EXPECT_EQ(Sign({"A"}, {"K"}, 300).n(), 300);
}

TEST(SignTest, RejectsBadLength) {
  EXPECT_THROW(Sign({"A"}, {"K"}, 7), Error);
  EXPECT_THROW(Sign({"A"}, {"K"}, 6), Error);
  EXPECT_THROW(Sign({"A"}, {"K"}, 9), Error);
}

TEST(SignTest, RejectsEmptyMessage) {
  try {
    Sign({""}, {"K"}, 16);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidInput);
  }
}

TEST(SignTest, DifferentKeysAgreeOnHalfTheBits) {
  const int n = 64;
  const Signature base = Sign({"A"}, {"K"}, n);
  double agreement = 0.0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    const Signature other = Sign({"A"}, {"key-" + std::to_string(t)}, n);
    for (int i = 0; i < n; ++i) agreement += base[i] == other[i];
  }
  EXPECT_NEAR(agreement / (trials * n), 0.5, 0.05);
}

TEST(SignatureTest, RejectsNonBinaryBits) {
  EXPECT_THROW(Signature({1, 0, -1}), Error);
  EXPECT_THROW(Signature({2}), Error);
  EXPECT_THROW(Signature(std::vector<int8_t>{}), Error);
}

TEST(SignatureTest, BytesAreTwosComplement) {
  const Signature sig({-1, 1});
  EXPECT_EQ(sig.Bytes(), (std::vector<uint8_t>{0xff, 0x01}));
}

TEST(EncodeTriggerTest, MatchesIndependentImplementation) {
  const TriggerSpec t = EncodeTrigger(Signature(kGoldenSig), 1024, 64);
  EXPECT_EQ(t.trigger_token, 1006);
  EXPECT_EQ(t.insert_count, 5);
}

TEST(EncodeTriggerTest, StaysInReservedRegion) {
  Rng rng(1);
  const ReservedRegion region = MakeReservedRegion(1024, 64);
  for (int i = 0; i < 200; ++i) {
    const Signature sig = RandomSig(16, rng);
    const TriggerSpec t = EncodeTrigger(sig, 1024, 64);
    EXPECT_TRUE(region.Contains(t.trigger_token));
    EXPECT_EQ(t.trigger_token, EncodeTrigger(sig, 1024, 64).trigger_token);
  }
}

TEST(EncodeTriggerTest, SingleReservedToken) {
  Rng rng(2);
  for (int i = 0; i < 20; ++i) {
    EXPECT_EQ(EncodeTrigger(RandomSig(8, rng), 100, 1).trigger_token, 99);
  }
}

TEST(EncodeTriggerTest, CollisionRateNearOneOverRegion) {
  Rng rng(3);
  const int region = 16;
  const int trials = 20000;
  int collisions = 0;
  for (int i = 0; i < trials; ++i) {
    collisions += EncodeTrigger(RandomSig(32, rng), 256, region).trigger_token ==
                  EncodeTrigger(RandomSig(32, rng), 256, region).trigger_token;
  }
  EXPECT_NEAR(static_cast<double>(collisions) / trials, 1.0 / region, 0.01);
}

TEST(EncodeTriggerTest, RejectsBadRegion) {
  const Signature sig(kGoldenSig);
  EXPECT_THROW(EncodeTrigger(sig, 64, 64), Error);
  EXPECT_THROW(EncodeTrigger(sig, 64, 0), Error);
  EXPECT_THROW(EncodeTrigger(sig, 64, 8, 0), Error);
}

TEST(SelectTest, MatchesIndependentImplementation) {
  const VerificationSetSpec v =
      SelectVerificationSet(Signature(kGoldenSig), 2000, 5);
  EXPECT_EQ(v.indices, (std::vector<uint32_t>{1335, 922, 1870, 457, 1859}));
  EXPECT_EQ(v.pool_size, 2000u);
}

TEST(SelectTest, SinglePoolEntry) {
  const VerificationSetSpec v =
      SelectVerificationSet(Signature(kGoldenSig), 1, 3);
  EXPECT_EQ(v.indices, (std::vector<uint32_t>{0, 0, 0}));
}

TEST(SelectTest, PrefixStable) {
  const Signature sig(kGoldenSig);
  const auto long_set = SelectVerificationSet(sig, 500, 50).indices;
  const auto short_set = SelectVerificationSet(sig, 500, 10).indices;
  EXPECT_TRUE(std::equal(short_set.begin(), short_set.end(), long_set.begin()));
}

TEST(SelectTest, OneBitFlipDecorrelatesIndices) {
  Rng rng(4);
  const int pool = 50;
  const int trials = 1000;
  const int q = 20;
  int overlaps = 0;
  for (int t = 0; t < trials; ++t) {
    const Signature a = RandomSig(16, rng);
    std::vector<int8_t> flipped = a.bits();
    flipped[rng.Below(16)] *= -1;
    const auto ia = SelectVerificationSet(a, pool, q).indices;
    const auto ib = SelectVerificationSet(Signature(flipped), pool, q).indices;
    for (int i = 0; i < q; ++i) overlaps += ia[i] == ib[i];
  }
  EXPECT_NEAR(static_cast<double>(overlaps) / (trials * q), 1.0 / pool, 0.005);
}

TEST(SelectTest, RejectsBadArguments) {
  const Signature sig(kGoldenSig);
  EXPECT_THROW(SelectVerificationSet(sig, 0, 3), Error);
  EXPECT_THROW(SelectVerificationSet(sig, 10, 0), Error);
}

TEST(SpreadTest, ModulationKeyMatchesIndependentImplementation) {
  const std::vector<int8_t> expected = {
      1,  -1, -1, -1, 1,  -1, 1,  1,  1,  -1, 1,  -1, 1,  1,  -1, -1,
      -1, -1, 1,  1,  1,  -1, -1, -1, -1, -1, 1,  -1, -1, -1, -1, 1,
      1,  1,  1,  -1, -1, 1,  1,  1,  1,  -1, 1,  1,  1,  -1, 1,  -1};
  EXPECT_EQ(ModulationKey(Signature(kGoldenSig), 48), expected);
  EXPECT_EQ(Spread(Signature(kGoldenSig), 3).sm, expected);
}

TEST(SpreadTest, WorkedExample) {
  const SpreadSignature s =
      SpreadWithKey(Signature({-1, 1}), 2, std::vector<int8_t>{1, -1, -1, 1});
  EXPECT_EQ(s.bits, (std::vector<int8_t>{-1, -1, 1, 1}));
  EXPECT_EQ(s.k, 2);
}

TEST(SpreadTest, IdentityModulation) {
  const Signature sig(kGoldenSig);
  const SpreadSignature s = Spread(sig, 1, /*seed_from_sig=*/false);
  EXPECT_EQ(s.bits, sig.bits());
}

TEST(SpreadTest, TiledLayout) {
  const Signature sig(kGoldenSig);
  const SpreadSignature s = Spread(sig, 3);
  ASSERT_EQ(s.bits.size(), 48u);
  for (int j = 0; j < 48; ++j) {
    EXPECT_EQ(s.bits[j], sig[j % 16] * s.sm[j]) << "chip " << j;
  }
}

TEST(SpreadTest, RejectsBadKey) {
  const Signature sig({1, -1});
  EXPECT_THROW(Spread(sig, 0), Error);
  EXPECT_THROW(SpreadWithKey(sig, 2, std::vector<int8_t>{1, 1, 1}), Error);
  EXPECT_THROW(SpreadWithKey(sig, 1, std::vector<int8_t>{1, 0}), Error);
}

TEST(QuantizeTest, WindowEdges) {
  EXPECT_EQ(QuantizeChip(0.5), 0);
  EXPECT_EQ(QuantizeChip(0.5000001), 1);
  EXPECT_EQ(QuantizeChip(1.4999999), 1);
  EXPECT_EQ(QuantizeChip(1.5), 0);
  EXPECT_EQ(QuantizeChip(-0.5), 0);
  EXPECT_EQ(QuantizeChip(-1.0), -1);
  EXPECT_EQ(QuantizeChip(-1.5), 0);
  EXPECT_EQ(QuantizeChip(0.0), 0);
  EXPECT_EQ(QuantizeChip(std::nan("")), 0);
}

TEST(DespreadTest, QuantizationCaseTable) {
  // One position, k = 3, ro = {0.9, 1.2, 2.0} -> votes {+1, +1, 0} -> +1.
  const std::vector<double> observed = {0.9, 1.2, 2.0};
  const std::vector<int8_t> sm = {1, 1, 1};
  EXPECT_EQ(Despread(observed, sm, 3).trits, (std::vector<int8_t>{1}));
}

TEST(DespreadTest, DeadZoneGivesErasures) {
  const std::vector<double> observed(12, 0.0);
  const std::vector<int8_t> sm(12, 1);
  EXPECT_EQ(Despread(observed, sm, 3).trits, std::vector<int8_t>(4, 0));
}

TEST(DespreadTest, TiesAreErasures) {
  // k = 2 with votes {+1, -1} and k = 3 with votes {+1, -1, 0}.
  EXPECT_EQ(Despread(std::vector<double>{1.0, -1.0},
                     std::vector<int8_t>{1, 1}, 2)
                .trits,
            (std::vector<int8_t>{0}));
  EXPECT_EQ(Despread(std::vector<double>{1.0, -1.0, 0.0},
                     std::vector<int8_t>{1, 1, 1}, 3)
                .trits,
            (std::vector<int8_t>{0}));
}

TEST(DespreadTest, LengthMismatch) {
  EXPECT_THROW(Despread(std::vector<double>{1.0, 1.0},
                        std::vector<int8_t>{1}, 1),
               Error);
  EXPECT_THROW(Despread(std::vector<double>{1.0, 1.0, 1.0},
                        std::vector<int8_t>{1, 1, 1}, 2),
               Error);
}

// Round trip and dead-zone noise tolerance over random signatures.
TEST(DespreadTest, RoundTripProperty) {
  Rng rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 8 + 2 * static_cast<int>(rng.Below(30));
    const int k = 1 + static_cast<int>(rng.Below(6));
    const Signature sig = RandomSig(n, rng);
    const SpreadSignature s = Spread(sig, k);
    std::vector<double> clean(s.bits.begin(), s.bits.end());
    std::vector<double> noisy = clean;
    for (double& v : noisy) v += rng.Uniform(-0.49, 0.49);
    EXPECT_EQ(Wer(sig, Despread(clean, s.sm, k)), 1.0);
    EXPECT_EQ(Wer(sig, Despread(noisy, s.sm, k)), 1.0);
  }
}

TEST(WerTest, Basics) {
  const Signature sig(kGoldenSig);
  ExtractedSignature same{sig.bits()};
  ExtractedSignature negated{sig.bits()};
  for (auto& t : negated.trits) t = -t;
  ExtractedSignature erased{std::vector<int8_t>(16, 0)};
  EXPECT_EQ(Wer(sig, same), 1.0);
  EXPECT_EQ(Wer(sig, negated), 0.0);
  EXPECT_EQ(Wer(sig, erased), 0.0);
  EXPECT_THROW(Wer(sig, ExtractedSignature{{1, 1}}), Error);
}

TEST(WerTest, RandomGuessAveragesOneHalf) {
  Rng rng(6);
  const Signature sig(kGoldenSig);
  double total = 0.0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    ExtractedSignature guess;
    for (int i = 0; i < 16; ++i) guess.trits.push_back(rng.Below(2) ? 1 : -1);
    total += Wer(sig, guess);
  }
  EXPECT_NEAR(total / trials, 0.5, 0.03);
}

TEST(WerTest, InvariantUnderJointPermutation) {
  Rng rng(7);
  for (int t = 0; t < 50; ++t) {
    const Signature sig = RandomSig(16, rng);
    ExtractedSignature ex;
    for (int i = 0; i < 16; ++i) {
      ex.trits.push_back(static_cast<int8_t>(static_cast<int>(rng.Below(3)) - 1));
    }
    std::vector<int> perm(16);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = 15; i > 0; --i) std::swap(perm[i], perm[rng.Below(i + 1)]);
    std::vector<int8_t> sig_p(16);
    ExtractedSignature ex_p;
    ex_p.trits.resize(16);
    for (int i = 0; i < 16; ++i) {
      sig_p[i] = sig[perm[i]];
      ex_p.trits[i] = ex.trits[perm[i]];
    }
    const double w = Wer(sig, ex);
    EXPECT_GE(w, 0.0);
    EXPECT_LE(w, 1.0);
    EXPECT_EQ(w, Wer(Signature(sig_p), ex_p));
  }
}

}  // namespace
}  // namespace nsmark
