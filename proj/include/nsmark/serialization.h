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

// Structured-document I/O shared by the key file, model checkpoints and
// reports. Matrices travel as base64 of
//   u32le rows | u32le cols | row-major f64le payload.

#ifndef NSMARK_SERIALIZATION_H_
#define NSMARK_SERIALIZATION_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "nsmark/common.h"
#include "nsmark/toymodel/encoder.h"
#include "nsmark/toymodel/extractor.h"

namespace nsmark {

using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

std::string Base64Encode(std::span<const uint8_t> bytes);
std::vector<uint8_t> Base64Decode(const std::string& text);

std::vector<uint8_t> MatrixBytes(const Matrix& m);
Matrix MatrixFromBytes(std::span<const uint8_t> bytes);

std::string EncodeMatrix(const Matrix& m);
Matrix DecodeMatrix(const std::string& text);

// Column vectors are stored as n x 1 matrices.
std::string EncodeVector(const Vector& v);
Vector DecodeVector(const std::string& text);

Json EncoderToJson(const ToyEncoder& model);
ToyEncoder EncoderFromJson(const Json& doc);

Json ExtractorToJson(const Extractor& extractor);
Extractor ExtractorFromJson(const Json& doc);

// A model checkpoint: encoder parameters plus, for attacked models, the
// output transform applied after the encoder.
struct Checkpoint {
  ToyEncoder model;
  std::optional<Matrix> post_transform;
};

Json CheckpointToJson(const Checkpoint& checkpoint);
Checkpoint CheckpointFromJson(const Json& doc);
void WriteCheckpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint ReadCheckpoint(const std::string& path);

Json ReadJsonFile(const std::string& path);
void WriteJsonFile(const std::string& path, const Json& doc);
void WriteTextFile(const std::string& path, const std::string& text);

// Throws kInvalidInput naming `key` when it is missing.
const Json& Field(const Json& doc, const std::string& key);

}  // namespace nsmark

#endif  // NSMARK_SERIALIZATION_H_
