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

#ifndef NSMARK_TOYMODEL_CORPUS_H_
#define NSMARK_TOYMODEL_CORPUS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "nsmark/sigstream.h"

namespace nsmark {

inline constexpr int kMaxSequenceLength = 64;

struct TokenSequence {
  std::vector<int32_t> tokens;

  int size() const { return static_cast<int>(tokens.size()); }
  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

// Token sequences plus optional class labels (empty when unlabeled).
struct Corpus {
  std::vector<TokenSequence> samples;
  std::vector<int> labels;

  int size() const { return static_cast<int>(samples.size()); }
};

// Synthetic topic corpus: each sample belongs to one of `topics` classes and
// draws most of its tokens from that class's slice of the ordinary
// (non-reserved) vocabulary.
struct CorpusConfig {
  int32_t vocab_size = 1024;
  int32_t reserved_region = 64;
  int topics = 4;
  int min_length = 8;
  int max_length = 24;
  double topic_mass = 0.7;
};

Corpus MakeTopicCorpus(int count, const CorpusConfig& config, uint64_t seed);

// One sample per line, whitespace-separated token ids.
Corpus ReadCorpus(const std::string& path);
void WriteCorpus(const std::string& path, const Corpus& corpus);
std::vector<int> ReadLabels(const std::string& path);
void WriteLabels(const std::string& path, const std::vector<int>& labels);

// Inserts spec.insert_count copies of the trigger. Positions are drawn
// without replacement from a generator seeded with `seed`, or placed at the
// front for InsertionRule::kFront. The source is truncated first when the
// result would exceed max_length; triggers are never dropped.
TokenSequence InsertTrigger(const TokenSequence& x, const TriggerSpec& spec,
                            uint64_t seed,
                            int max_length = kMaxSequenceLength);

// Places `token` at the given output positions (sorted or not).
TokenSequence InsertTriggerAt(const TokenSequence& x, int32_t token,
                              const std::vector<int>& positions);

}  // namespace nsmark

#endif  // NSMARK_TOYMODEL_CORPUS_H_
