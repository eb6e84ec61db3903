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

// Output matrices, null spaces, the null space matching degree (NSMD), random
// invertible attack matrices and the random-angle theory behind the NSMD
// lower bound.
//
// Convention: an output matrix is d x q, one column per verification sample.
// Its null space matrix is q x p with orthonormal columns.

#ifndef NSMARK_NULLSPACE_H_
#define NSMARK_NULLSPACE_H_

#include <cstdint>
#include <vector>

#include "nsmark/common.h"

namespace nsmark {

inline constexpr double kDefaultNullSpaceRelTol = 1e-8;
inline constexpr double kDefaultConditionCap = 1e12;

struct OutputMatrix {
  Matrix data;

  int dim() const { return static_cast<int>(data.rows()); }
  int samples() const { return static_cast<int>(data.cols()); }
};

struct NullSpaceMatrix {
  Matrix data;                  // q x p
  double tolerance_used = 0.0;  // absolute singular-value cut
  int rank = 0;                 // numerical rank of the source matrix

  int p() const { return static_cast<int>(data.cols()); }
  // True when the source matrix had full column rank and p = 0.
  bool rank_complete() const { return data.cols() == 0; }
};

struct AttackMatrix {
  Matrix data;
  double condition_estimate = 0.0;
  uint64_t seed_used = 0;
};

struct AngleTheory {
  int m = 0;
  double dy = 0.0;           // variance of cos(theta)
  double expectation = 0.0;  // mean of cos(theta), exactly 0
  double k_m = 0.0;          // density normalizer Gamma(m/2)/Gamma((m-1)/2)/sqrt(pi)
};

struct AngleSample {
  int m = 0;
  int trials = 0;
  double mean = 0.0;
  double variance = 0.0;
  std::vector<int> cos_histogram;    // bins over [-1, 1]
  std::vector<int> angle_histogram;  // bins over [0, pi]
};

bool AllFinite(const Matrix& m);

int NumericalRank(const Matrix& a, double rel_tol = kDefaultNullSpaceRelTol);

NullSpaceMatrix NullSpace(const OutputMatrix& a,
                          double rel_tol = kDefaultNullSpaceRelTol);

double Nsmd(const OutputMatrix& a, const NullSpaceMatrix& n);
double Nsmd(const Matrix& a, const Matrix& n);

// Entries i.i.d. uniform on [0, 1). A draw whose condition estimate exceeds
// `condition_cap` is redrawn with seed + 1, at most 8 times.
AttackMatrix GenerateQ(int d, uint64_t seed,
                       double condition_cap = kDefaultConditionCap);

double ConditionEstimate(const Matrix& q);

// I_m = integral of sin^m over [0, pi/2], evaluated through log-Gamma.
double SinePowerIntegral(int m);

AngleTheory TheoryDy(int m);

// p * DY(q): lower bound on NSMD for unrelated A and N.
double NsmdLowerBound(int q, int p);

AngleSample EmpiricalAngleDistribution(int m, int trials, uint64_t seed,
                                       int bins = 50);

}  // namespace nsmark

#endif  // NSMARK_NULLSPACE_H_
