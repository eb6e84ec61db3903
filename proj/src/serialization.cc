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

#include "nsmark/serialization.h"

#include <openssl/evp.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace nsmark {
namespace {

void PutU32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void PutU64(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint64_t GetLe(std::span<const uint8_t> bytes, size_t offset, int width) {
  uint64_t v = 0;
  for (int i = 0; i < width; ++i) {
    v |= static_cast<uint64_t>(bytes[offset + i]) << (8 * i);
  }
  return v;
}

Json ConfigToJson(const EncoderConfig& c) {
  return Json{{"vocab_size", c.vocab_size},
              {"embed_dim", c.embed_dim},
              {"hidden_dim", c.hidden_dim},
              {"output_dim", c.output_dim}};
}

// Matrix-valued and vector-valued tensors share one encoding; vectors are
// n x 1 and are restored through their column.
template <typename Params>
Json ParamsToJson(const Params& params) {
  Json tensors = Json::object();
  params.ForEach([&](const char* name, const auto& t) {
    tensors[name] = EncodeMatrix(Matrix(t));
  });
  return tensors;
}

template <typename Params>
void ParamsFromJson(const Json& tensors, Params& params) {
  params.ForEach([&](const char* name, auto& t) {
    const Matrix m = DecodeMatrix(Field(tensors, name).get<std::string>());
    using T = std::decay_t<decltype(t)>;
    if constexpr (std::is_same_v<T, Vector>) {
      Require(m.cols() == 1, std::string("tensor ") + name +
                                 " must be a column vector");
      t = m.col(0);
    } else {
      t = m;
    }
  });
}

}  // namespace

std::string Base64Encode(std::span<const uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int written = EVP_EncodeBlock(
      reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
      static_cast<int>(bytes.size()));
  out.resize(static_cast<size_t>(written));
  return out;
}

std::vector<uint8_t> Base64Decode(const std::string& text) {
  Require(text.size() % 4 == 0, "base64 text length must be a multiple of 4");
  std::vector<uint8_t> out(3 * (text.size() / 4));
  const int written = EVP_DecodeBlock(
      out.data(), reinterpret_cast<const unsigned char*>(text.data()),
      static_cast<int>(text.size()));
  Require(written >= 0, "invalid base64 text");
  // EVP_DecodeBlock keeps the zero bytes that stand in for padding.
  size_t padding = 0;
  if (!text.empty() && text.back() == '=') ++padding;
  if (text.size() >= 2 && text[text.size() - 2] == '=') ++padding;
  out.resize(static_cast<size_t>(written) - padding);
  return out;
}

std::vector<uint8_t> MatrixBytes(const Matrix& m) {
  Require(m.rows() <= UINT32_MAX && m.cols() <= UINT32_MAX,
          "matrix too large to serialize");
  std::vector<uint8_t> out;
  out.reserve(8 + 8 * static_cast<size_t>(m.size()));
  PutU32(out, static_cast<uint32_t>(m.rows()));
  PutU32(out, static_cast<uint32_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      PutU64(out, std::bit_cast<uint64_t>(m(i, j)));
    }
  }
  return out;
}

Matrix MatrixFromBytes(std::span<const uint8_t> bytes) {
  Require(bytes.size() >= 8, "matrix blob shorter than its header");
  const uint64_t rows = GetLe(bytes, 0, 4);
  const uint64_t cols = GetLe(bytes, 4, 4);
  Require(bytes.size() == 8 + 8 * rows * cols,
          "matrix blob size does not match its " + std::to_string(rows) +
              "x" + std::to_string(cols) + " header");
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  size_t offset = 8;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j, offset += 8) {
      m(i, j) = std::bit_cast<double>(GetLe(bytes, offset, 8));
    }
  }
  return m;
}

std::string EncodeMatrix(const Matrix& m) { return Base64Encode(MatrixBytes(m)); }

Matrix DecodeMatrix(const std::string& text) {
  return MatrixFromBytes(Base64Decode(text));
}

std::string EncodeVector(const Vector& v) { return EncodeMatrix(Matrix(v)); }

Vector DecodeVector(const std::string& text) {
  const Matrix m = DecodeMatrix(text);
  Require(m.cols() == 1, "expected a column vector");
  return m.col(0);
}

const Json& Field(const Json& doc, const std::string& key) {
  Require(doc.is_object() && doc.contains(key),
          "document is missing field '" + key + "'");
  return doc.at(key);
}

Json EncoderToJson(const ToyEncoder& model) {
  return Json{{"config", ConfigToJson(model.config())},
              {"tensors", ParamsToJson(model.params())}};
}

ToyEncoder EncoderFromJson(const Json& doc) {
  const Json& c = Field(doc, "config");
  EncoderConfig config;
  config.vocab_size = Field(c, "vocab_size").get<int32_t>();
  config.embed_dim = Field(c, "embed_dim").get<int>();
  config.hidden_dim = Field(c, "hidden_dim").get<int>();
  config.output_dim = Field(c, "output_dim").get<int>();
  EncoderParams params;
  ParamsFromJson(Field(doc, "tensors"), params);
  return ToyEncoder(config, std::move(params));
}

Json ExtractorToJson(const Extractor& extractor) {
  const ExtractorConfig& c = extractor.config();
  return Json{{"config",
               {{"input_dim", c.input_dim},
                {"hidden1", c.hidden1},
                {"hidden2", c.hidden2},
                {"output_dim", c.output_dim}}},
              {"tensors", ParamsToJson(extractor.params())}};
}

Extractor ExtractorFromJson(const Json& doc) {
  const Json& c = Field(doc, "config");
  ExtractorConfig config;
  config.input_dim = Field(c, "input_dim").get<int>();
  config.hidden1 = Field(c, "hidden1").get<int>();
  config.hidden2 = Field(c, "hidden2").get<int>();
  config.output_dim = Field(c, "output_dim").get<int>();
  ExtractorParams params;
  ParamsFromJson(Field(doc, "tensors"), params);
  return Extractor(config, std::move(params));
}

Json CheckpointToJson(const Checkpoint& checkpoint) {
  Json doc{{"format", "nsmark-checkpoint"},
           {"format_version", kFormatVersion},
           {"encoder", EncoderToJson(checkpoint.model)}};
  if (checkpoint.post_transform.has_value()) {
    doc["post_transform"] = EncodeMatrix(*checkpoint.post_transform);
  }
  return doc;
}

Checkpoint CheckpointFromJson(const Json& doc) {
  Require(Field(doc, "format") == "nsmark-checkpoint",
          "document is not a model checkpoint");
  Require(Field(doc, "format_version") == kFormatVersion,
          "unsupported checkpoint format version");
  Checkpoint out{EncoderFromJson(Field(doc, "encoder")), std::nullopt};
  if (doc.contains("post_transform")) {
    Matrix t = DecodeMatrix(doc.at("post_transform").get<std::string>());
    Require(t.rows() == out.model.output_dim() &&
                t.cols() == out.model.output_dim(),
            "post_transform must be square in the encoder output dimension");
    out.post_transform = std::move(t);
  }
  return out;
}

void WriteCheckpoint(const std::string& path, const Checkpoint& checkpoint) {
  WriteJsonFile(path, CheckpointToJson(checkpoint));
}

Checkpoint ReadCheckpoint(const std::string& path) {
  return CheckpointFromJson(ReadJsonFile(path));
}

Json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot open '" + path + "' for reading");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    Fail(ErrorCode::kInvalidInput,
         "'" + path + "' is not valid JSON: " + e.what());
  }
}

void WriteJsonFile(const std::string& path, const Json& doc) {
  WriteTextFile(path, doc.dump(2) + "\n");
}

void WriteTextFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorCode::kIo, "cannot open '" + path + "' for writing");
  out << text;
  if (!out) Fail(ErrorCode::kIo, "failed writing '" + path + "'");
}

}  // namespace nsmark
