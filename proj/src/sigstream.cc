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

#include "nsmark/sigstream.h"

#include <openssl/evp.h>

#include <algorithm>
#include <string>

#include "nsmark/common.h"

namespace nsmark {
namespace {

void AppendBits(const Digest& digest, int needed, std::vector<int8_t>& out) {
  for (uint8_t byte : digest) {
    for (int b = 7; b >= 0 && static_cast<int>(out.size()) < needed; --b) {
      out.push_back(((byte >> b) & 1) ? int8_t{1} : int8_t{-1});
    }
  }
}

}  // namespace

Digest Sha256(std::span<const uint8_t> data) {
  Digest out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(),
                 nullptr) != 1 ||
      len != out.size()) {
    Fail(ErrorCode::kNumerical, "SHA-256 evaluation failed");
  }
  return out;
}

Digest Sha256(const std::string& data) {
  return Sha256(std::span<const uint8_t>(
      reinterpret_cast<const uint8_t*>(data.data()), data.size()));
}

uint64_t DigestMod(const Digest& digest, uint64_t modulus) {
  Require(modulus >= 1, "modulus must be positive");
  // Horner's rule in base 256; intermediate values stay below 2^40 for any
  // modulus below 2^32 and the 128-bit product covers the rest.
  unsigned __int128 acc = 0;
  for (uint8_t byte : digest) {
    acc = (acc * 256 + byte) % modulus;
  }
  return static_cast<uint64_t>(acc);
}

Signature::Signature(std::vector<int8_t> bits) : bits_(std::move(bits)) {
  Require(!bits_.empty(), "signature must be non-empty");
  for (int8_t b : bits_) {
    Require(b == 1 || b == -1, "signature bits must be -1 or +1");
  }
}

std::vector<uint8_t> Signature::Bytes() const {
  std::vector<uint8_t> out(bits_.size());
  std::transform(bits_.begin(), bits_.end(), out.begin(),
                 [](int8_t b) { return static_cast<uint8_t>(b); });
  return out;
}

ReservedRegion MakeReservedRegion(int32_t vocab_size, int32_t region_size) {
  Require(region_size > 0 && vocab_size > region_size,
          "require vocab_size > reserved region size > 0");
  return ReservedRegion{vocab_size - region_size, region_size};
}

Signature Sign(const IdentityMessage& message, const SignerConfig& config,
               int n) {
  Require(!message.text.empty(), "identity message must be non-empty");
  Require(n >= 8 && n % 2 == 0, "signature length must be even and >= 8");
  switch (config.scheme) {
    case SignScheme::kHashExpand:
      break;
  }
  // h_0 = SHA256(len32le(K) || K || m); the length prefix keeps (K, m)
  // splits unambiguous.
  std::string seed;
  const auto key_len = static_cast<uint32_t>(config.private_key.size());
  for (int i = 0; i < 4; ++i) {
    seed.push_back(static_cast<char>((key_len >> (8 * i)) & 0xff));
  }
  seed += config.private_key;
  seed += message.text;

  std::vector<int8_t> bits;
  bits.reserve(n);
  Digest h = Sha256(seed);
  AppendBits(h, n, bits);
  while (static_cast<int>(bits.size()) < n) {
    h = Sha256(std::span<const uint8_t>(h));
    AppendBits(h, n, bits);
  }
  return Signature(std::move(bits));
}

Digest HashSignature(const Signature& sig) {
  const auto bytes = sig.Bytes();
  return Sha256(std::span<const uint8_t>(bytes));
}

TriggerSpec EncodeTrigger(const Signature& sig, int32_t vocab_size,
                          int32_t region_size, int insert_count) {
  const ReservedRegion region = MakeReservedRegion(vocab_size, region_size);
  Require(insert_count >= 1, "insert_count must be >= 1");
  TriggerSpec spec;
  spec.trigger_token = region.base + static_cast<int32_t>(DigestMod(
                                         HashSignature(sig), region.size));
  spec.insert_count = insert_count;
  return spec;
}

VerificationSetSpec SelectVerificationSet(const Signature& sig,
                                          uint64_t pool_size, int q) {
  Require(pool_size >= 1, "candidate pool must be non-empty");
  Require(q >= 1, "verification set size must be >= 1");
  VerificationSetSpec spec;
  spec.pool_size = pool_size;
  spec.indices.reserve(q);
  Digest h = HashSignature(sig);
  for (int i = 1; i <= q; ++i) {
    h = Sha256(std::span<const uint8_t>(h));
    spec.indices.push_back(static_cast<uint32_t>(DigestMod(h, pool_size)));
  }
  return spec;
}

std::vector<int8_t> ModulationKey(const Signature& sig, int length) {
  Require(length >= 0, "modulation key length must be non-negative");
  std::vector<uint8_t> block = sig.Bytes();
  const size_t prefix = block.size();
  block.resize(prefix + 8);
  std::vector<int8_t> sm;
  sm.reserve(length);
  for (uint64_t counter = 0; static_cast<int>(sm.size()) < length;
       ++counter) {
    for (int i = 0; i < 8; ++i) {
      block[prefix + i] = static_cast<uint8_t>(counter >> (56 - 8 * i));
    }
    AppendBits(Sha256(std::span<const uint8_t>(block)), length, sm);
  }
  return sm;
}

SpreadSignature Spread(const Signature& sig, int k, bool seed_from_sig) {
  Require(k >= 1, "spread factor must be >= 1");
  const int length = k * sig.n();
  if (seed_from_sig) return SpreadWithKey(sig, k, ModulationKey(sig, length));
  return SpreadWithKey(sig, k, std::vector<int8_t>(length, 1));
}

SpreadSignature SpreadWithKey(const Signature& sig, int k,
                              std::span<const int8_t> sm) {
  Require(k >= 1, "spread factor must be >= 1");
  const int n = sig.n();
  Require(static_cast<int>(sm.size()) == k * n,
          "modulation key length must equal k * n");
  SpreadSignature out;
  out.k = k;
  out.sm.assign(sm.begin(), sm.end());
  out.bits.resize(k * n);
  for (int j = 0; j < k * n; ++j) {
    Require(sm[j] == 1 || sm[j] == -1, "modulation key must be +-1");
    out.bits[j] = static_cast<int8_t>(sig[j % n] * sm[j]);
  }
  return out;
}

int8_t QuantizeChip(double ro) {
  if (ro > 0.5 && ro < 1.5) return 1;
  if (ro > -1.5 && ro < -0.5) return -1;
  return 0;  // dead zone, out of range, or NaN
}

ExtractedSignature Despread(std::span<const double> observed,
                            std::span<const int8_t> sm, int k) {
  Require(k >= 1, "spread factor must be >= 1");
  Require(observed.size() == sm.size(),
          "observed length must equal modulation key length");
  Require(!observed.empty() && observed.size() % k == 0,
          "observed length must be a positive multiple of k");
  const int n = static_cast<int>(observed.size()) / k;
  ExtractedSignature out;
  out.trits.resize(n);
  for (int i = 0; i < n; ++i) {
    int votes_pos = 0, votes_neg = 0, votes_zero = 0;
    for (int c = 0; c < k; ++c) {
      const int j = i + c * n;
      // sm is +-1, so dividing by it equals multiplying by it.
      switch (QuantizeChip(observed[j] * sm[j])) {
        case 1:
          ++votes_pos;
          break;
        case -1:
          ++votes_neg;
          break;
        default:
          ++votes_zero;
      }
    }
    int8_t trit = 0;
    if (votes_pos > votes_neg && votes_pos > votes_zero) trit = 1;
    if (votes_neg > votes_pos && votes_neg > votes_zero) trit = -1;
    out.trits[i] = trit;
  }
  return out;
}

double Wer(const Signature& sig, const ExtractedSignature& extracted) {
  Require(static_cast<int>(extracted.trits.size()) == sig.n(),
          "signature and extracted lengths differ");
  Require(sig.n() > 0, "empty signature");
  int matches = 0;
  for (int i = 0; i < sig.n(); ++i) {
    if (extracted.trits[i] != 0 && extracted.trits[i] == sig[i]) ++matches;
  }
  return static_cast<double>(matches) / sig.n();
}

}  // namespace nsmark
