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

#ifndef NSMARK_COMMON_H_
#define NSMARK_COMMON_H_

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace nsmark {

// Row-major double storage is used for every matrix that crosses a module
// boundary or is serialized.
using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class ErrorCode {
  kInvalidInput,
  kUnsupportedDimension,
  kNumerical,
  kIo,
  kKeyConstruction,
};

const char* ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void Fail(ErrorCode code, const std::string& message);

inline void Require(bool condition, const std::string& message) {
  if (!condition) Fail(ErrorCode::kInvalidInput, message);
}

// Seeded generator with platform-independent conversions. The standard
// distributions are implementation-defined, so draws are derived directly
// from the mt19937_64 stream, whose output sequence is fixed by the standard.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t NextU64() { return engine_(); }

  // Uniform on [0, 1).
  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Standard normal via Box-Muller; one draw per call.
  double Normal();

  // Uniform integer on [0, n).
  uint64_t Below(uint64_t n);

 private:
  std::mt19937_64 engine_;
};

// Derives an independent stream seed from a base seed and a tag.
uint64_t MixSeed(uint64_t seed, uint64_t tag);

}  // namespace nsmark

#endif  // NSMARK_COMMON_H_
