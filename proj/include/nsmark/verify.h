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

// Key packaging, the two-metric verification pipeline (WER first, NSMD as
// the fallback), threshold calibration and verdicts.

#ifndef NSMARK_VERIFY_H_
#define NSMARK_VERIFY_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nsmark/nullspace.h"
#include "nsmark/serialization.h"
#include "nsmark/sigstream.h"
#include "nsmark/toymodel/corpus.h"
#include "nsmark/toymodel/encoder.h"
#include "nsmark/toymodel/extractor.h"

namespace nsmark {

inline constexpr double kDefaultWerThreshold = 0.6;
// Desk-scale NSMD threshold, 0.6 x the mean clean/watermarked gap measured
// over the five reference seeds of the acceptance run.
inline constexpr double kDeskNsmdThreshold = 14.0;

// Everything needed to regenerate the verification material from sig.
struct KeyParams {
  int q = 200;
  int k = 3;
  int32_t vocab_size = 1024;
  int32_t region_size = 64;
  int insert_count = 5;
  InsertionRule insertion_rule = InsertionRule::kRandomPosition;
};

struct WatermarkKey {
  Signature sig;
  Extractor extractor;
  NullSpaceMatrix null_space;
  KeyParams params;
  uint64_t pool_size = 0;
  std::string hash_scheme = kHashSchemeId;
  std::string prg_scheme = kPrgSchemeId;
  std::string sign_scheme = kSignSchemeId;
  int64_t timestamp = 0;  // seconds since the epoch
};

Json KeyToJson(const WatermarkKey& key);
WatermarkKey KeyFromJson(const Json& doc);
void WriteKey(const std::string& path, const WatermarkKey& key);
WatermarkKey ReadKey(const std::string& path);

// Seed for trigger positions in the verification samples, derived from
// Hash(sig) so the samples are reproducible from the key alone.
uint64_t SignatureSeed(const Signature& sig);

TriggerSpec KeyTrigger(const Signature& sig, const KeyParams& params);

// D_V selected by `selector`, with `trigger` inserted into every sample.
std::vector<TokenSequence> MaterializeVerificationSamples(
    const Signature& selector, std::span<const TokenSequence> pool, int q,
    const TriggerSpec& trigger);

// Regenerates t, D_V and the trigger-inserted samples from sig, extracts A
// from `model`, and stores its full null space.
WatermarkKey BuildKey(const Signature& sig, const Extractor& extractor,
                      const OutputModel& model,
                      std::span<const TokenSequence> pool,
                      const KeyParams& params, int64_t timestamp);

struct Thresholds {
  double wer = kDefaultWerThreshold;   // T_W
  double nsmd = kDeskNsmdThreshold;    // T_N
};

void ValidateThresholds(const Thresholds& t);

enum class Verdict { kOwned, kOwnedViaNullSpace, kNotOwned };

const char* VerdictName(Verdict v);

// owned iff wer > T_W; otherwise owned-via-nullspace iff nsmd < T_N.
Verdict Decide(double wer, double nsmd, const Thresholds& t);

struct VerdictReport {
  double wer = 0.0;
  double nsmd = 0.0;
  bool passed_wer = false;
  bool passed_nsmd = false;
  Verdict verdict = Verdict::kNotOwned;
  Thresholds thresholds;
  int64_t key_timestamp = 0;
  std::string diagnostic;
};

Json ReportToJson(const VerdictReport& report);
std::string FormatReport(const VerdictReport& report);

// WER of the extractor on an output matrix: E is applied to every column,
// the outputs are averaged, and the mean is despread once.
double MatrixWer(const Extractor& extractor, const OutputMatrix& a,
                 const Signature& sig, const SpreadSignature& sig_sm);

// Black-box verification: the suspect is only queried for output vectors.
VerdictReport Verify(const WatermarkKey& key, const OutputModel& suspect,
                     std::span<const TokenSequence> pool,
                     const Thresholds& thresholds);

struct QuadrantResult {
  double wer = 0.0;
  double nsmd = 0.0;
};

struct ReliabilityReport {
  QuadrantResult wrong_trigger;      // (t_w, sig_c)
  QuadrantResult wrong_sig;          // (t_c, sig_w)
  QuadrantResult both_wrong;         // (t_w, sig_w)
  QuadrantResult clean_model;        // f_clean with the correct key
  double wrong_extractor_wer = 0.0;  // f_wm with a fresh extractor E_w
  double random_null_space_nsmd = 0.0;  // N_r, entries uniform on [0, 1)
  double small_null_space_nsmd = 0.0;   // N_s, entries below 1e-200
  int draws = 0;
};

// Wrong-key analyses. Wrong signatures are uniform random +-1 strings; the
// wrong trigger of each draw is Encode(sig_w), skipping draws that collide
// with the correct trigger. Quadrant values are means over `draws` draws.
ReliabilityReport ReliabilitySuite(const WatermarkKey& key,
                                   const OutputModel& watermarked,
                                   const OutputModel& clean,
                                   std::span<const TokenSequence> pool,
                                   uint64_t seed, int draws = 8);

// T_W = 0.6 * (mean wer_wm - mean wer_clean),
// T_N = 0.6 * (mean nsmd_clean - mean nsmd_wm). At least three models per
// class; a non-positive gap is a calibration failure.
Thresholds CalibrateThresholds(std::span<const double> wer_wm,
                               std::span<const double> nsmd_wm,
                               std::span<const double> wer_clean,
                               std::span<const double> nsmd_clean);

// Two keys claiming one model: the earlier timestamp owns it. Returns -1
// when `a` wins, 1 when `b` wins and 0 on a tie.
int CompareOwnership(const WatermarkKey& a, const WatermarkKey& b);

}  // namespace nsmark

#endif  // NSMARK_VERIFY_H_
