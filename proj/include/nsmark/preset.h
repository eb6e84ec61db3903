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

// Named experiment presets. A preset fully determines a run and is written
// into every report so the run can be replayed.

#ifndef NSMARK_PRESET_H_
#define NSMARK_PRESET_H_

#include <cstdint>
#include <string>
#include <vector>

#include "nsmark/serialization.h"
#include "nsmark/toymodel/corpus.h"
#include "nsmark/toymodel/embedding.h"
#include "nsmark/toymodel/encoder.h"
#include "nsmark/verify.h"

namespace nsmark {

struct ExperimentPreset {
  std::string name = "desk-default";
  int n = 16;
  EncoderConfig encoder;
  CorpusConfig corpus;
  int clean_samples = 500;
  int pool_samples = 2000;
  uint64_t pool_seed = 7;
  TrainConfig train;
  KeyParams key;
  Thresholds thresholds;
  std::vector<uint64_t> seeds = {0, 1, 2, 3, 4};
};

// Known names: "desk-default", "micro" (tiny sizes for smoke tests).
ExperimentPreset GetPreset(const std::string& name);

Json PresetToJson(const ExperimentPreset& preset);

}  // namespace nsmark

#endif  // NSMARK_PRESET_H_
