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

// nsmark: command-line entry point. Human-readable text goes to stdout,
// structured documents to the files named by --out.
//
// Exit codes: 0 success, 2 invalid input, 3 verification verdict not-owned,
// 4 numerical failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nsmark/attacks.h"
#include "nsmark/nullspace.h"
#include "nsmark/preset.h"
#include "nsmark/serialization.h"
#include "nsmark/sigstream.h"
#include "nsmark/toymodel/corpus.h"
#include "nsmark/toymodel/embedding.h"
#include "nsmark/verify.h"

namespace nsmark {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitNotOwned = 3;
constexpr int kExitNumerical = 4;

std::string ReadBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot open '" + path + "' for reading");
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::string Join(const std::string& dir, const std::string& name) {
  return dir.empty() || dir.back() == '/' ? dir + name : dir + "/" + name;
}

void MakeOutputDir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) Fail(ErrorCode::kIo, "cannot create '" + dir + "': " + ec.message());
}

Json Int8Array(const std::vector<int8_t>& v) { return Json(v); }

// --- corpus ---------------------------------------------------------------

struct CorpusArgs {
  std::string preset = "desk-default";
  int count = 500;
  uint64_t seed = 100;
  std::string out;
  std::string labels;
};

int RunCorpus(const CorpusArgs& a) {
  const ExperimentPreset p = GetPreset(a.preset);
  const Corpus c = MakeTopicCorpus(a.count, p.corpus, a.seed);
  WriteCorpus(a.out, c);
  if (!a.labels.empty()) WriteLabels(a.labels, c.labels);
  std::cout << "wrote " << c.size() << " samples to " << a.out << "\n";
  return kExitOk;
}

// --- keygen ---------------------------------------------------------------

struct KeygenArgs {
  std::string preset = "desk-default";
  std::string message;
  std::string private_key;
  int n = 0;
  int k = 0;
  int q = 0;
  uint64_t pool_size = 0;
  std::string out;
};

int RunKeygen(const KeygenArgs& a) {
  const ExperimentPreset p = GetPreset(a.preset);
  const int n = a.n > 0 ? a.n : p.n;
  const int k = a.k > 0 ? a.k : p.key.k;
  const int q = a.q > 0 ? a.q : p.key.q;
  const uint64_t pool_size =
      a.pool_size > 0 ? a.pool_size : static_cast<uint64_t>(p.pool_samples);
  const SignerConfig signer{ReadBytes(a.private_key), SignScheme::kHashExpand};
  const Signature sig = Sign(IdentityMessage{a.message}, signer, n);
  const SpreadSignature spread = Spread(sig, k);
  const TriggerSpec trigger = EncodeTrigger(sig, p.key.vocab_size,
                                            p.key.region_size,
                                            p.key.insert_count);
  const VerificationSetSpec dv = SelectVerificationSet(sig, pool_size, q);
  const Json doc{{"format", "nsmark-keygen"},
                 {"format_version", kFormatVersion},
                 {"preset", p.name},
                 {"schemes",
                  {{"hash", kHashSchemeId},
                   {"prg", kPrgSchemeId},
                   {"sign", kSignSchemeId}}},
                 {"n", n},
                 {"k", k},
                 {"q", q},
                 {"pool_size", pool_size},
                 {"sig", Int8Array(sig.bits())},
                 {"sig_sm", Int8Array(spread.bits)},
                 {"sm", Int8Array(spread.sm)},
                 {"trigger_token", trigger.trigger_token},
                 {"insert_count", trigger.insert_count},
                 {"verification_indices", dv.indices}};
  MakeOutputDir(a.out);
  WriteJsonFile(Join(a.out, "keygen.json"), doc);
  std::cout << "sig length " << sig.n() << ", spread length "
            << spread.bits.size() << ", trigger token "
            << trigger.trigger_token << "\n"
            << "wrote " << Join(a.out, "keygen.json") << "\n";
  return kExitOk;
}

// --- embed ----------------------------------------------------------------

struct EmbedArgs {
  std::string preset = "desk-default";
  std::string corpus;
  std::string pool;
  std::string keygen;
  std::string out;
  int epochs = -1;
  double lambda1 = -1.0;
  double lambda2 = -1.0;
  int dim = 0;
  uint64_t seed = 0;
  int64_t timestamp = 0;
};

int RunEmbed(const EmbedArgs& a) {
  ExperimentPreset p = GetPreset(a.preset);
  if (a.epochs >= 0) p.train.epochs = a.epochs;
  if (a.lambda1 >= 0.0) p.train.lambda1 = a.lambda1;
  if (a.lambda2 >= 0.0) p.train.lambda2 = a.lambda2;
  if (a.dim > 0) p.encoder.output_dim = a.dim;
  p.train.seed = a.seed;
  p.seeds = {a.seed};

  const Json kg = ReadJsonFile(a.keygen);
  const Signature sig(Field(kg, "sig").get<std::vector<int8_t>>());
  p.key.k = Field(kg, "k").get<int>();
  p.key.q = Field(kg, "q").get<int>();
  const Corpus clean = ReadCorpus(a.corpus);
  const Corpus pool = ReadCorpus(a.pool);
  Require(pool.samples.size() == Field(kg, "pool_size").get<uint64_t>(),
          "pool size does not match the keygen output");

  const SpreadSignature sig_sm = Spread(sig, p.key.k);
  const TriggerSpec trigger = KeyTrigger(sig, p.key);
  const ToyEncoder init(p.encoder, a.seed);
  const EmbedResult r = EmbedWatermark(init, p.train, clean, trigger, sig_sm);

  const WatermarkKey key =
      BuildKey(sig, r.extractor, r.model, pool.samples, p.key, a.timestamp);
  const auto samples = MaterializeVerificationSamples(
      sig, pool.samples, p.key.q, trigger);
  const OutputMatrix a1 = ExtractKeyMatrix(r.model, samples);
  const VerdictReport self = Verify(key, r.model, pool.samples, p.thresholds);

  Json trace = Json::array();
  for (const auto& e : r.trace.epochs) {
    trace.push_back({{"epoch", e.epoch},
                     {"l_match", e.l_match},
                     {"l_random", e.l_random},
                     {"l_0", e.l_0}});
  }
  MakeOutputDir(a.out);
  WriteCheckpoint(Join(a.out, "model.json"), Checkpoint{r.model, std::nullopt});
  WriteKey(Join(a.out, "watermark.nskey"), key);
  WriteJsonFile(Join(a.out, "a1.json"),
                Json{{"format", "nsmark-output-matrix"},
                     {"matrix", EncodeMatrix(a1.data)}});
  WriteJsonFile(Join(a.out, "trace.json"),
                Json{{"optimizer", r.trace.optimizer},
                     {"lr_encoder", r.trace.lr_encoder},
                     {"lr_extractor", r.trace.lr_extractor},
                     {"converged", r.trace.converged},
                     {"status", r.trace.status},
                     {"epochs", trace}});
  WriteJsonFile(Join(a.out, "report.json"),
                Json{{"command", "embed"},
                     {"preset", PresetToJson(p)},
                     {"null_space_p", key.null_space.p()},
                     {"self_verify", ReportToJson(self)}});
  std::cout << "training: " << r.trace.status << "\n"
            << "null space columns p = " << key.null_space.p() << "\n"
            << "self-verify\n"
            << FormatReport(self) << "wrote model.json, watermark.nskey, "
            << "a1.json, trace.json, report.json to " << a.out << "\n";
  return kExitOk;
}

// --- attack ---------------------------------------------------------------

struct AttackArgs {
  std::string checkpoint;
  AttackDescriptor attack;
  std::string corpus;
  std::string labels;
  std::string out;
};

int RunAttack(const AttackArgs& a) {
  const AttackedModel in =
      AttackedModel::FromCheckpoint(ReadCheckpoint(a.checkpoint));
  const AttackDescriptor& d = a.attack;
  AttackedModel out = in;
  std::string summary;
  if (d.type == "identity") {
    summary = "identity attack: outputs unchanged";
  } else if (d.type == "ll-lfea") {
    out = MultiLlLfea(in, d.rounds, d.seed);
    summary = "ll-lfea: " + std::to_string(d.rounds) + " round(s)";
  } else if (d.type == "prune") {
    out = AttackedModel(Prune(in.base(), d.rate), in.post_transform());
    summary = "prune: zero fraction " +
              std::to_string(ZeroFraction(out.base()));
  } else if (d.type == "finetune") {
    Require(!a.corpus.empty() && !a.labels.empty(),
            "finetune needs --corpus and --labels");
    Corpus task = ReadCorpus(a.corpus);
    task.labels = ReadLabels(a.labels);
    FinetuneConfig fc;
    fc.epochs = d.epochs;
    fc.seed = d.seed;
    const FinetuneResult ft = Finetune(in.base(), task, fc);
    out = AttackedModel(ft.model, in.post_transform());
    summary = "finetune: task accuracy " + std::to_string(ft.accuracy);
  } else {
    Fail(ErrorCode::kInvalidInput, "unknown attack type '" + d.type + "'");
  }
  WriteCheckpoint(a.out, out.ToCheckpoint());
  WriteJsonFile(a.out + ".attack.json",
                Json{{"command", "attack"},
                     {"source", a.checkpoint},
                     {"attack", AttackDescriptorToJson(d)}});
  std::cout << summary << "\nwrote " << a.out << "\n";
  return kExitOk;
}

// --- recover --------------------------------------------------------------

struct RecoverArgs {
  std::string pre;
  std::string checkpoint;
  std::string key;
  std::string pool;
  std::string out;
};

int RunRecover(const RecoverArgs& a) {
  const Json pre = ReadJsonFile(a.pre);
  const OutputMatrix a1{DecodeMatrix(Field(pre, "matrix").get<std::string>())};
  const AttackedModel attacked =
      AttackedModel::FromCheckpoint(ReadCheckpoint(a.checkpoint));
  const WatermarkKey key = ReadKey(a.key);
  const Corpus pool = ReadCorpus(a.pool);
  const auto samples = MaterializeVerificationSamples(
      key.sig, pool.samples, key.params.q, KeyTrigger(key.sig, key.params));
  const OutputMatrix a2 = ExtractKeyMatrix(attacked, samples);
  const RecoveryTransform t = EstimateRecovery(a1, a2);
  const AttackedModel recovered = attacked.ThenMatrix(t.data);
  WriteCheckpoint(a.out, recovered.ToCheckpoint());
  WriteJsonFile(a.out + ".recovery.json",
                Json{{"command", "recover"},
                     {"residual", t.residual},
                     {"regularized", t.regularized}});
  std::cout << "recovery residual " << t.residual
            << (t.regularized ? " (regularized)" : "") << "\nwrote " << a.out
            << "\n";
  return kExitOk;
}

// --- verify ---------------------------------------------------------------

struct VerifyArgs {
  std::string key;
  std::string checkpoint;
  std::string pool;
  Thresholds thresholds;
  std::string out;
};

int RunVerify(const VerifyArgs& a) {
  const WatermarkKey key = ReadKey(a.key);
  const AttackedModel suspect =
      AttackedModel::FromCheckpoint(ReadCheckpoint(a.checkpoint));
  const Corpus pool = ReadCorpus(a.pool);
  const VerdictReport r = Verify(key, suspect, pool.samples, a.thresholds);
  std::cout << FormatReport(r);
  if (!a.out.empty()) {
    WriteJsonFile(a.out, Json{{"command", "verify"},
                              {"key", a.key},
                              {"suspect", a.checkpoint},
                              {"report", ReportToJson(r)}});
  }
  return r.verdict == Verdict::kNotOwned ? kExitNotOwned : kExitOk;
}

// --- theory ---------------------------------------------------------------

struct TheoryArgs {
  bool table_dy = false;
  std::vector<int> bound;
  std::vector<int> dims;
};

int RunTheory(const TheoryArgs& a) {
  Require(a.table_dy || !a.bound.empty() || !a.dims.empty(),
          "theory needs --table-dy, --bound or --m");
  std::vector<int> dims = a.dims;
  if (a.table_dy) {
    for (int m : {10, 20, 300, 768, 1024, 100000}) dims.push_back(m);
  }
  // Evaluate first so a bad dimension fails before anything is printed.
  std::vector<double> dy;
  for (int m : dims) dy.push_back(TheoryDy(m).dy);
  if (!dims.empty()) {
    std::printf("%10s  %14s\n", "m", "DY");
    for (size_t i = 0; i < dims.size(); ++i) {
      std::printf("%10d  %14.6g\n", dims[i], dy[i]);
    }
  }
  if (!a.bound.empty()) {
    const int q = a.bound[0];
    const int p = a.bound[1];
    std::printf("NSMD lower bound p * DY(%d) with p = %d: %.4f\n", q, p,
                NsmdLowerBound(q, p));
  }
  return kExitOk;
}

int ExitCodeFor(ErrorCode code) {
  return code == ErrorCode::kNumerical ? kExitNumerical : kExitInvalid;
}

}  // namespace
}  // namespace nsmark

int main(int argc, char** argv) {
  using namespace nsmark;
  CLI::App app{"Null-space watermarking toolkit for toy encoders"};
  app.require_subcommand(1);

  CorpusArgs corpus;
  auto* c = app.add_subcommand("corpus", "write a synthetic topic corpus");
  c->add_option("--preset", corpus.preset);
  c->add_option("--count", corpus.count)->check(CLI::PositiveNumber);
  c->add_option("--seed", corpus.seed);
  c->add_option("--out", corpus.out)->required();
  c->add_option("--labels", corpus.labels, "also write class labels here");

  KeygenArgs keygen;
  auto* kg = app.add_subcommand("keygen", "signature, trigger and D_V indices");
  kg->add_option("--preset", keygen.preset);
  kg->add_option("--message", keygen.message)->required();
  kg->add_option("--private-key", keygen.private_key, "file with key bytes")
      ->required();
  kg->add_option("--n", keygen.n);
  kg->add_option("--k", keygen.k);
  kg->add_option("--q", keygen.q);
  kg->add_option("--pool-size", keygen.pool_size);
  kg->add_option("--out", keygen.out)->required();

  EmbedArgs embed;
  auto* em = app.add_subcommand("embed", "embed the watermark and emit a key");
  em->add_option("--preset", embed.preset);
  em->add_option("--corpus", embed.corpus)->required();
  em->add_option("--pool", embed.pool)->required();
  em->add_option("--keygen", embed.keygen)->required();
  em->add_option("--out", embed.out)->required();
  em->add_option("--epochs", embed.epochs);
  em->add_option("--lambda1", embed.lambda1);
  em->add_option("--lambda2", embed.lambda2);
  em->add_option("--dim", embed.dim, "encoder output dimension d");
  em->add_option("--seed", embed.seed);
  em->add_option("--timestamp", embed.timestamp, "key timestamp (seconds)");

  AttackArgs attack;
  auto* at = app.add_subcommand("attack", "apply an attack to a checkpoint");
  at->add_option("--checkpoint", attack.checkpoint)->required();
  at->add_option("--type", attack.attack.type)
      ->check(CLI::IsMember({"identity", "ll-lfea", "prune", "finetune"}));
  at->add_option("--seed", attack.attack.seed);
  at->add_option("--rounds", attack.attack.rounds)->check(CLI::NonNegativeNumber);
  at->add_option("--rate", attack.attack.rate)->check(CLI::Range(0.0, 1.0));
  at->add_option("--epochs", attack.attack.epochs)->check(CLI::NonNegativeNumber);
  at->add_option("--corpus", attack.corpus);
  at->add_option("--labels", attack.labels);
  at->add_option("--out", attack.out)->required();

  RecoverArgs recover;
  auto* rc = app.add_subcommand("recover", "undo an LL-LFEA given A1");
  rc->add_option("--pre", recover.pre, "pre-attack output matrix")->required();
  rc->add_option("--checkpoint", recover.checkpoint)->required();
  rc->add_option("--key", recover.key)->required();
  rc->add_option("--pool", recover.pool)->required();
  rc->add_option("--out", recover.out)->required();

  VerifyArgs verify;
  auto* vf = app.add_subcommand("verify", "verify a suspect against a key");
  vf->add_option("--key", verify.key)->required();
  vf->add_option("--checkpoint", verify.checkpoint)->required();
  vf->add_option("--pool", verify.pool)->required();
  vf->add_option("--tw", verify.thresholds.wer, "WER threshold T_W");
  vf->add_option("--tn", verify.thresholds.nsmd, "NSMD threshold T_N");
  vf->add_option("--out", verify.out, "structured report path");

  TheoryArgs theory;
  auto* th = app.add_subcommand("theory", "DY table and NSMD bound");
  th->add_flag("--table-dy", theory.table_dy);
  th->add_option("--bound", theory.bound, "q p")->expected(2);
  th->add_option("--m", theory.dims, "dimensions to tabulate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc_parse = app.exit(e);
    return rc_parse == 0 ? 0 : 2;
  }

  try {
    if (*c) return RunCorpus(corpus);
    if (*kg) return RunKeygen(keygen);
    if (*em) return RunEmbed(embed);
    if (*at) return RunAttack(attack);
    if (*rc) return RunRecover(recover);
    if (*vf) return RunVerify(verify);
    if (*th) return RunTheory(theory);
  } catch (const Error& e) {
    std::cerr << "error (" << ErrorCodeName(e.code()) << "): " << e.what()
              << "\n";
    return ExitCodeFor(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
