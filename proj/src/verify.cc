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

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "nsmark/toymodel/embedding.h"

namespace nsmark {
namespace {

constexpr uint64_t kWrongSigTag = 11;
constexpr uint64_t kWrongExtractorTag = 12;
constexpr uint64_t kRandomNullTag = 13;

const char* RuleName(InsertionRule rule) {
  return rule == InsertionRule::kFront ? "front" : "random-position";
}

InsertionRule ParseRule(const std::string& name) {
  if (name == "front") return InsertionRule::kFront;
  Require(name == "random-position", "unknown insertion rule '" + name + "'");
  return InsertionRule::kRandomPosition;
}

double Mean(std::span<const double> xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) /
         static_cast<double>(xs.size());
}

Signature RandomSignature(int n, Rng& rng) {
  std::vector<int8_t> bits(static_cast<size_t>(n));
  for (auto& b : bits) b = (rng.NextU64() >> 63) ? 1 : -1;
  return Signature(std::move(bits));
}

Matrix UniformMatrix(int rows, int cols, double scale, Rng& rng) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = scale * rng.Uniform();
  }
  return m;
}

}  // namespace

uint64_t SignatureSeed(const Signature& sig) {
  const Digest h = HashSignature(sig);
  uint64_t seed = 0;
  for (int i = 0; i < 8; ++i) seed = (seed << 8) | h[i];
  return seed;
}

TriggerSpec KeyTrigger(const Signature& sig, const KeyParams& params) {
  TriggerSpec t = EncodeTrigger(sig, params.vocab_size, params.region_size,
                                params.insert_count);
  t.insertion_rule = params.insertion_rule;
  return t;
}

std::vector<TokenSequence> MaterializeVerificationSamples(
    const Signature& selector, std::span<const TokenSequence> pool, int q,
    const TriggerSpec& trigger) {
  Require(!pool.empty(), "verification pool must be non-empty");
  const VerificationSetSpec spec =
      SelectVerificationSet(selector, pool.size(), q);
  const uint64_t base = SignatureSeed(selector);
  std::vector<TokenSequence> out;
  out.reserve(spec.indices.size());
  for (size_t j = 0; j < spec.indices.size(); ++j) {
    out.push_back(InsertTrigger(pool[spec.indices[j]], trigger,
                                MixSeed(base, j)));
  }
  return out;
}

WatermarkKey BuildKey(const Signature& sig, const Extractor& extractor,
                      const OutputModel& model,
                      std::span<const TokenSequence> pool,
                      const KeyParams& params, int64_t timestamp) {
  Require(!pool.empty(), "verification pool must be non-empty");
  Require(params.q > model.output_dim(),
          "q = " + std::to_string(params.q) +
              " must exceed the output dimension d = " +
              std::to_string(model.output_dim()));
  Require(extractor.config().input_dim == model.output_dim(),
          "extractor input dimension does not match the model output");
  Require(extractor.config().output_dim == params.k * sig.n(),
          "extractor output dimension must equal k * n");
  const auto samples = MaterializeVerificationSamples(
      sig, pool, params.q, KeyTrigger(sig, params));
  const OutputMatrix a = ExtractKeyMatrix(model, samples);
  WatermarkKey key;
  key.sig = sig;
  key.extractor = extractor;
  key.null_space = NullSpace(a);
  if (key.null_space.rank_complete()) {
    Fail(ErrorCode::kKeyConstruction,
         "output matrix has full column rank " +
             std::to_string(key.null_space.rank) + "; null space is empty");
  }
  key.params = params;
  key.pool_size = pool.size();
  key.timestamp = timestamp;
  return key;
}

Json KeyToJson(const WatermarkKey& key) {
  const SpreadSignature spread = Spread(key.sig, key.params.k);
  const KeyParams& p = key.params;
  return Json{
      {"format", "nsmark-key"},
      {"format_version", kFormatVersion},
      {"schemes",
       {{"hash", key.hash_scheme},
        {"prg", key.prg_scheme},
        {"sign", key.sign_scheme}}},
      {"timestamp", key.timestamp},
      {"sig", key.sig.bits()},
      {"sig_sm", spread.bits},
      {"params",
       {{"q", p.q},
        {"k", p.k},
        {"vocab_size", p.vocab_size},
        {"region_size", p.region_size},
        {"insert_count", p.insert_count},
        {"insertion_rule", RuleName(p.insertion_rule)},
        {"pool_size", key.pool_size}}},
      {"extractor", ExtractorToJson(key.extractor)},
      {"null_space",
       {{"matrix", EncodeMatrix(key.null_space.data)},
        {"tolerance_used", key.null_space.tolerance_used},
        {"rank", key.null_space.rank}}},
  };
}

WatermarkKey KeyFromJson(const Json& doc) {
  Require(Field(doc, "format") == "nsmark-key", "document is not a key");
  Require(Field(doc, "format_version") == kFormatVersion,
          "unsupported key format version");
  WatermarkKey key;
  const Json& schemes = Field(doc, "schemes");
  key.hash_scheme = Field(schemes, "hash").get<std::string>();
  key.prg_scheme = Field(schemes, "prg").get<std::string>();
  key.sign_scheme = Field(schemes, "sign").get<std::string>();
  Require(key.hash_scheme == kHashSchemeId && key.prg_scheme == kPrgSchemeId,
          "unsupported hash or PRG scheme in key");
  key.timestamp = Field(doc, "timestamp").get<int64_t>();
  key.sig = Signature(Field(doc, "sig").get<std::vector<int8_t>>());

  const Json& p = Field(doc, "params");
  key.params.q = Field(p, "q").get<int>();
  key.params.k = Field(p, "k").get<int>();
  key.params.vocab_size = Field(p, "vocab_size").get<int32_t>();
  key.params.region_size = Field(p, "region_size").get<int32_t>();
  key.params.insert_count = Field(p, "insert_count").get<int>();
  key.params.insertion_rule =
      ParseRule(Field(p, "insertion_rule").get<std::string>());
  key.pool_size = Field(p, "pool_size").get<uint64_t>();

  // sig_sm is redundant; it must match what the key's sig regenerates.
  const auto stored_sm = Field(doc, "sig_sm").get<std::vector<int8_t>>();
  Require(stored_sm == Spread(key.sig, key.params.k).bits,
          "stored sig_sm does not match the regenerated spread signature");

  key.extractor = ExtractorFromJson(Field(doc, "extractor"));
  const Json& ns = Field(doc, "null_space");
  key.null_space.data = DecodeMatrix(Field(ns, "matrix").get<std::string>());
  key.null_space.tolerance_used = Field(ns, "tolerance_used").get<double>();
  key.null_space.rank = Field(ns, "rank").get<int>();
  Require(key.null_space.data.rows() == key.params.q,
          "null space row count does not match q");
  return key;
}

void WriteKey(const std::string& path, const WatermarkKey& key) {
  WriteJsonFile(path, KeyToJson(key));
}

WatermarkKey ReadKey(const std::string& path) {
  return KeyFromJson(ReadJsonFile(path));
}

void ValidateThresholds(const Thresholds& t) {
  Require(t.wer > 0.0 && t.wer <= 1.0, "T_W must lie in (0, 1]");
  Require(t.nsmd > 0.0, "T_N must be positive");
}

const char* VerdictName(Verdict v) {
  switch (v) {
    case Verdict::kOwned:
      return "owned";
    case Verdict::kOwnedViaNullSpace:
      return "owned-via-nullspace";
    case Verdict::kNotOwned:
      return "not-owned";
  }
  return "not-owned";
}

Verdict Decide(double wer, double nsmd, const Thresholds& t) {
  if (wer > t.wer) return Verdict::kOwned;
  if (nsmd < t.nsmd) return Verdict::kOwnedViaNullSpace;
  return Verdict::kNotOwned;
}

Json ReportToJson(const VerdictReport& r) {
  return Json{{"wer", r.wer},
              {"nsmd", r.nsmd},
              {"passed_wer", r.passed_wer},
              {"passed_nsmd", r.passed_nsmd},
              {"verdict", VerdictName(r.verdict)},
              {"thresholds", {{"T_W", r.thresholds.wer},
                              {"T_N", r.thresholds.nsmd}}},
              {"key_timestamp", r.key_timestamp},
              {"diagnostic", r.diagnostic}};
}

std::string FormatReport(const VerdictReport& r) {
  std::ostringstream out;
  out << "WER    " << r.wer << (r.passed_wer ? "  > " : "  <= ")
      << "T_W " << r.thresholds.wer << "\n";
  out << "NSMD   " << r.nsmd << (r.passed_nsmd ? "  < " : "  >= ")
      << "T_N " << r.thresholds.nsmd << "\n";
  out << "verdict " << VerdictName(r.verdict) << "\n";
  if (!r.diagnostic.empty()) out << "note    " << r.diagnostic << "\n";
  return out.str();
}

double MatrixWer(const Extractor& extractor, const OutputMatrix& a,
                 const Signature& sig, const SpreadSignature& sig_sm) {
  Require(a.samples() > 0, "output matrix has no columns");
  Vector mean = Vector::Zero(extractor.config().output_dim);
  for (int j = 0; j < a.samples(); ++j) {
    mean += extractor.Forward(a.data.col(j));
  }
  mean /= static_cast<double>(a.samples());
  const ExtractedSignature extracted = Despread(
      std::span<const double>(mean.data(), static_cast<size_t>(mean.size())),
      sig_sm.sm, sig_sm.k);
  return Wer(sig, extracted);
}

VerdictReport Verify(const WatermarkKey& key, const OutputModel& suspect,
                     std::span<const TokenSequence> pool,
                     const Thresholds& thresholds) {
  ValidateThresholds(thresholds);
  VerdictReport report;
  report.thresholds = thresholds;
  report.key_timestamp = key.timestamp;
  if (suspect.output_dim() != key.extractor.config().input_dim) {
    report.nsmd = std::numeric_limits<double>::infinity();
    report.verdict = Verdict::kNotOwned;
    report.diagnostic =
        "dimension mismatch: suspect outputs " +
        std::to_string(suspect.output_dim()) + " values, key expects " +
        std::to_string(key.extractor.config().input_dim);
    return report;
  }
  Require(pool.size() == key.pool_size,
          "verification pool has " + std::to_string(pool.size()) +
              " samples, key was built on " + std::to_string(key.pool_size));

  const auto samples = MaterializeVerificationSamples(
      key.sig, pool, key.params.q, KeyTrigger(key.sig, key.params));
  const OutputMatrix a = ExtractKeyMatrix(suspect, samples);
  if (!AllFinite(a.data)) {
    Fail(ErrorCode::kNumerical, "suspect produced non-finite outputs");
  }
  const SpreadSignature sig_sm = Spread(key.sig, key.params.k);
  report.wer = MatrixWer(key.extractor, a, key.sig, sig_sm);
  report.nsmd = Nsmd(a, key.null_space);
  report.passed_wer = report.wer > thresholds.wer;
  report.passed_nsmd = report.nsmd < thresholds.nsmd;
  report.verdict = Decide(report.wer, report.nsmd, thresholds);
  return report;
}

ReliabilityReport ReliabilitySuite(const WatermarkKey& key,
                                   const OutputModel& watermarked,
                                   const OutputModel& clean,
                                   std::span<const TokenSequence> pool,
                                   uint64_t seed, int draws) {
  Require(draws >= 1, "need at least one draw");
  const Signature& sig = key.sig;
  const int q = key.params.q;
  const SpreadSignature sig_sm = Spread(sig, key.params.k);
  const TriggerSpec t_c = KeyTrigger(sig, key.params);
  const auto correct_samples =
      MaterializeVerificationSamples(sig, pool, q, t_c);
  const OutputMatrix a_correct = ExtractKeyMatrix(watermarked, correct_samples);

  ReliabilityReport r;
  r.draws = draws;
  Rng rng(MixSeed(seed, kWrongSigTag));
  for (int made = 0; made < draws;) {
    const Signature sig_w = RandomSignature(sig.n(), rng);
    const TriggerSpec t_w = KeyTrigger(sig_w, key.params);
    if (t_w.trigger_token == t_c.trigger_token || sig_w == sig) continue;
    ++made;
    const SpreadSignature sig_w_sm = Spread(sig_w, key.params.k);

    // (t_w, sig_c): the key's D_V, decoded against sig_c, wrong trigger.
    const OutputMatrix a_tw = ExtractKeyMatrix(
        watermarked, MaterializeVerificationSamples(sig, pool, q, t_w));
    r.wrong_trigger.wer += MatrixWer(key.extractor, a_tw, sig, sig_sm);
    r.wrong_trigger.nsmd += Nsmd(a_tw, key.null_space);

    // (t_c, sig_w): the watermark response, decoded against sig_w.
    r.wrong_sig.wer += MatrixWer(key.extractor, a_correct, sig_w, sig_w_sm);
    r.wrong_sig.nsmd += Nsmd(a_correct, key.null_space);

    // (t_w, sig_w): everything regenerated from the wrong signature.
    const OutputMatrix a_both = ExtractKeyMatrix(
        watermarked, MaterializeVerificationSamples(sig_w, pool, q, t_w));
    r.both_wrong.wer += MatrixWer(key.extractor, a_both, sig_w, sig_w_sm);
    r.both_wrong.nsmd += Nsmd(a_both, key.null_space);
  }
  for (QuadrantResult* qr : {&r.wrong_trigger, &r.wrong_sig, &r.both_wrong}) {
    qr->wer /= draws;
    qr->nsmd /= draws;
  }

  const OutputMatrix a_clean = ExtractKeyMatrix(clean, correct_samples);
  r.clean_model.wer = MatrixWer(key.extractor, a_clean, sig, sig_sm);
  r.clean_model.nsmd = Nsmd(a_clean, key.null_space);

  const Extractor e_w(key.extractor.config(), MixSeed(seed, kWrongExtractorTag));
  r.wrong_extractor_wer = MatrixWer(e_w, a_correct, sig, sig_sm);

  Rng n_rng(MixSeed(seed, kRandomNullTag));
  const int p = key.null_space.p();
  r.random_null_space_nsmd = Nsmd(a_correct.data, UniformMatrix(q, p, 1.0, n_rng));
  // Squared entries this small underflow, the column norms come out zero and
  // the columns are left unscaled, so the score is of order 1e-98.
  r.small_null_space_nsmd =
      Nsmd(a_correct.data, UniformMatrix(q, p, 1e-200, n_rng));
  return r;
}

Thresholds CalibrateThresholds(std::span<const double> wer_wm,
                               std::span<const double> nsmd_wm,
                               std::span<const double> wer_clean,
                               std::span<const double> nsmd_clean) {
  Require(wer_wm.size() >= 3 && nsmd_wm.size() >= 3 && wer_clean.size() >= 3 &&
              nsmd_clean.size() >= 3,
          "calibration needs at least three models per class");
  const double wer_gap = Mean(wer_wm) - Mean(wer_clean);
  const double nsmd_gap = Mean(nsmd_clean) - Mean(nsmd_wm);
  if (!(wer_gap > 0.0) || !(nsmd_gap > 0.0)) {
    Fail(ErrorCode::kInvalidInput,
         "degenerate calibration gap: WER gap " + std::to_string(wer_gap) +
             ", NSMD gap " + std::to_string(nsmd_gap));
  }
  Thresholds t;
  t.wer = std::min(1.0, 0.6 * wer_gap);
  t.nsmd = 0.6 * nsmd_gap;
  return t;
}

int CompareOwnership(const WatermarkKey& a, const WatermarkKey& b) {
  if (a.timestamp < b.timestamp) return -1;
  if (b.timestamp < a.timestamp) return 1;
  return 0;
}

}  // namespace nsmark
