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

#include "nsmark/preset.h"

namespace nsmark {

ExperimentPreset GetPreset(const std::string& name) {
  ExperimentPreset p;
  p.name = name;
  if (name == "desk-default") return p;
  if (name == "micro") {
    p.n = 8;
    p.encoder = {128, 8, 12, 8};
    p.corpus.vocab_size = 128;
    p.corpus.reserved_region = 16;
    p.clean_samples = 40;
    p.pool_samples = 100;
    p.train.epochs = 2;
    p.train.extractor_hidden1 = 16;
    p.train.extractor_hidden2 = 12;
    p.key.q = 20;
    p.key.vocab_size = 128;
    p.key.region_size = 16;
    p.seeds = {0};
    return p;
  }
  Fail(ErrorCode::kInvalidInput, "unknown preset '" + name + "'");
}

Json PresetToJson(const ExperimentPreset& p) {
  const TrainConfig& t = p.train;
  return Json{
      {"name", p.name},
      {"n", p.n},
      {"encoder",
       {{"vocab_size", p.encoder.vocab_size},
        {"embed_dim", p.encoder.embed_dim},
        {"hidden_dim", p.encoder.hidden_dim},
        {"output_dim", p.encoder.output_dim}}},
      {"corpus",
       {{"reserved_region", p.corpus.reserved_region},
        {"topics", p.corpus.topics},
        {"min_length", p.corpus.min_length},
        {"max_length", p.corpus.max_length},
        {"topic_mass", p.corpus.topic_mass},
        {"clean_samples", p.clean_samples},
        {"pool_samples", p.pool_samples},
        {"pool_seed", p.pool_seed}}},
      {"train",
       {{"lambda1", t.lambda1},
        {"lambda2", t.lambda2},
        {"lr_encoder", t.lr_encoder},
        {"lr_extractor", t.lr_extractor},
        {"batch_size", t.batch_size},
        {"epochs", t.epochs},
        {"seed", t.seed},
        {"match_threshold", t.match_threshold},
        {"extractor_hidden1", t.extractor_hidden1},
        {"extractor_hidden2", t.extractor_hidden2}}},
      {"key",
       {{"q", p.key.q},
        {"k", p.key.k},
        {"insert_count", p.key.insert_count},
        {"insertion_rule", p.key.insertion_rule == InsertionRule::kFront
                               ? "front"
                               : "random-position"}}},
      {"thresholds", {{"T_W", p.thresholds.wer}, {"T_N", p.thresholds.nsmd}}},
      {"seeds", p.seeds},
  };
}

}  // namespace nsmark
