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

// Bit-level watermark material: owner signatures, trigger tokens, the
// hash-chain verification-set selection, spread-spectrum coding and the
// watermark extracting rate.

#ifndef NSMARK_SIGSTREAM_H_
#define NSMARK_SIGSTREAM_H_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace nsmark {

inline constexpr char kHashSchemeId[] = "sha256";
inline constexpr char kPrgSchemeId[] = "sha256-ctr";
inline constexpr char kSignSchemeId[] = "hash-expand-sha256";

using Digest = std::array<uint8_t, 32>;

Digest Sha256(std::span<const uint8_t> data);
Digest Sha256(const std::string& data);

// Interprets the digest as a big-endian 256-bit integer and reduces it.
uint64_t DigestMod(const Digest& digest, uint64_t modulus);

struct IdentityMessage {
  std::string text;
};

enum class SignScheme { kHashExpand };

struct SignerConfig {
  std::string private_key;
  SignScheme scheme = SignScheme::kHashExpand;
};

// Owner identity bitstring, every element in {-1, +1}.
class Signature {
 public:
  Signature() = default;
  explicit Signature(std::vector<int8_t> bits);

  const std::vector<int8_t>& bits() const { return bits_; }
  int n() const { return static_cast<int>(bits_.size()); }
  int8_t operator[](int i) const { return bits_[i]; }

  // int8 two's-complement serialization (-1 -> 0xff, +1 -> 0x01). This is
  // the byte string fed to Hash(sig) and to the modulation-key generator.
  std::vector<uint8_t> Bytes() const;

  friend bool operator==(const Signature&, const Signature&) = default;

 private:
  std::vector<int8_t> bits_;
};

struct SpreadSignature {
  std::vector<int8_t> bits;  // sig_sm
  std::vector<int8_t> sm;    // modulation key
  int k = 1;
};

struct ExtractedSignature {
  std::vector<int8_t> trits;  // 0 marks an erasure
};

struct VerificationSetSpec {
  std::vector<uint32_t> indices;
  uint64_t pool_size = 0;

  int q() const { return static_cast<int>(indices.size()); }
};

enum class InsertionRule { kRandomPosition, kFront };

struct TriggerSpec {
  int32_t trigger_token = 0;
  int insert_count = 5;
  InsertionRule insertion_rule = InsertionRule::kRandomPosition;
};

// The top `size` ids of the vocabulary are reserved for trigger tokens.
struct ReservedRegion {
  int32_t base = 0;
  int32_t size = 0;

  bool Contains(int32_t token) const {
    return token >= base && token < base + size;
  }
};

ReservedRegion MakeReservedRegion(int32_t vocab_size, int32_t region_size);

Signature Sign(const IdentityMessage& message, const SignerConfig& config,
               int n);

// Hash(sig), the head of the selection hash chain.
Digest HashSignature(const Signature& sig);

TriggerSpec EncodeTrigger(const Signature& sig, int32_t vocab_size,
                          int32_t region_size, int insert_count = 5);

VerificationSetSpec SelectVerificationSet(const Signature& sig,
                                          uint64_t pool_size, int q);

// Modulation key of the given length, generated by SHA-256 in counter mode
// seeded with the signature bytes.
std::vector<int8_t> ModulationKey(const Signature& sig, int length);

// With seed_from_sig = false the modulation key is all +1.
SpreadSignature Spread(const Signature& sig, int k, bool seed_from_sig = true);
SpreadSignature SpreadWithKey(const Signature& sig, int k,
                              std::span<const int8_t> sm);

int8_t QuantizeChip(double ro);

ExtractedSignature Despread(std::span<const double> observed,
                            std::span<const int8_t> sm, int k);

double Wer(const Signature& sig, const ExtractedSignature& extracted);

}  // namespace nsmark

#endif  // NSMARK_SIGSTREAM_H_
