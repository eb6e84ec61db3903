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

#include "nsmark/toymodel/corpus.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "nsmark/common.h"

namespace nsmark {

Corpus MakeTopicCorpus(int count, const CorpusConfig& config, uint64_t seed) {
  Require(count >= 0, "corpus size must be non-negative");
  Require(config.topics >= 1, "need at least one topic");
  Require(config.min_length >= 1 && config.max_length >= config.min_length,
          "invalid sample length range");
  const ReservedRegion region =
      MakeReservedRegion(config.vocab_size, config.reserved_region);
  const int32_t ordinary = region.base;
  const int32_t slice = ordinary / config.topics;
  Require(slice >= 1, "too many topics for the ordinary vocabulary");

  Rng rng(seed);
  Corpus corpus;
  corpus.samples.reserve(count);
  corpus.labels.reserve(count);
  for (int i = 0; i < count; ++i) {
    const int topic = static_cast<int>(rng.Below(config.topics));
    const int length =
        config.min_length +
        static_cast<int>(rng.Below(config.max_length - config.min_length + 1));
    TokenSequence seq;
    seq.tokens.reserve(length);
    for (int j = 0; j < length; ++j) {
      int32_t token;
      if (rng.Uniform() < config.topic_mass) {
        token = topic * slice + static_cast<int32_t>(rng.Below(slice));
      } else {
        token = static_cast<int32_t>(rng.Below(ordinary));
      }
      seq.tokens.push_back(token);
    }
    corpus.samples.push_back(std::move(seq));
    corpus.labels.push_back(topic);
  }
  return corpus;
}

Corpus ReadCorpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot open corpus file: " + path);
  Corpus corpus;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    TokenSequence seq;
    long long token;
    while (fields >> token) {
      if (token < 0 || token > INT32_MAX) {
        Fail(ErrorCode::kInvalidInput, path + ":" + std::to_string(line_no) +
                                           ": token id out of range");
      }
      seq.tokens.push_back(static_cast<int32_t>(token));
    }
    if (!fields.eof()) {
      Fail(ErrorCode::kInvalidInput,
           path + ":" + std::to_string(line_no) + ": malformed token id");
    }
    if (!seq.tokens.empty()) corpus.samples.push_back(std::move(seq));
  }
  return corpus;
}

void WriteCorpus(const std::string& path, const Corpus& corpus) {
  std::ofstream out(path);
  if (!out) Fail(ErrorCode::kIo, "cannot write corpus file: " + path);
  for (const auto& seq : corpus.samples) {
    for (size_t i = 0; i < seq.tokens.size(); ++i) {
      if (i) out << ' ';
      out << seq.tokens[i];
    }
    out << '\n';
  }
}

std::vector<int> ReadLabels(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot open label file: " + path);
  std::vector<int> labels;
  int label;
  while (in >> label) labels.push_back(label);
  if (!in.eof()) Fail(ErrorCode::kInvalidInput, "malformed label file: " + path);
  return labels;
}

void WriteLabels(const std::string& path, const std::vector<int>& labels) {
  std::ofstream out(path);
  if (!out) Fail(ErrorCode::kIo, "cannot write label file: " + path);
  for (int label : labels) out << label << '\n';
}

TokenSequence InsertTriggerAt(const TokenSequence& x, int32_t token,
                              const std::vector<int>& positions) {
  const int total = x.size() + static_cast<int>(positions.size());
  std::vector<bool> is_trigger(total, false);
  for (int p : positions) {
    Require(p >= 0 && p < total, "trigger position out of range");
    Require(!is_trigger[p], "duplicate trigger position");
    is_trigger[p] = true;
  }
  TokenSequence out;
  out.tokens.reserve(total);
  int src = 0;
  for (int i = 0; i < total; ++i) {
    out.tokens.push_back(is_trigger[i] ? token : x.tokens[src++]);
  }
  return out;
}

TokenSequence InsertTrigger(const TokenSequence& x, const TriggerSpec& spec,
                            uint64_t seed, int max_length) {
  Require(spec.insert_count >= 1, "insert_count must be >= 1");
  Require(spec.insert_count <= max_length,
          "insert_count exceeds the maximum sequence length");
  TokenSequence source = x;
  if (source.size() + spec.insert_count > max_length) {
    source.tokens.resize(max_length - spec.insert_count);
  }
  const int total = source.size() + spec.insert_count;
  std::vector<int> positions;
  if (spec.insertion_rule == InsertionRule::kFront) {
    for (int i = 0; i < spec.insert_count; ++i) positions.push_back(i);
  } else {
    // Partial Fisher-Yates over the output slots.
    std::vector<int> slots(total);
    for (int i = 0; i < total; ++i) slots[i] = i;
    Rng rng(seed);
    for (int i = 0; i < spec.insert_count; ++i) {
      const int j = i + static_cast<int>(rng.Below(total - i));
      std::swap(slots[i], slots[j]);
      positions.push_back(slots[i]);
    }
  }
  return InsertTriggerAt(source, spec.trigger_token, positions);
}

}  // namespace nsmark
