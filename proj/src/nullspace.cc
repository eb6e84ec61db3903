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

#include "nsmark/nullspace.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/SVD>

namespace nsmark {
namespace {

Eigen::VectorXd SingularValues(const Matrix& a) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  return svd.singularValues();
}

// Scales each row to unit norm; zero rows stay zero.
Matrix NormalizedRows(const Matrix& a) {
  Matrix out = a;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double norm = out.row(i).norm();
    if (norm > 0.0) out.row(i) /= norm;
  }
  return out;
}

Matrix NormalizedCols(const Matrix& a) {
  Matrix out = a;
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    const double norm = out.col(j).norm();
    if (norm > 0.0) out.col(j) /= norm;
  }
  return out;
}

double LogSinePowerIntegral(int m) {
  return std::log(std::sqrt(std::numbers::pi) / 2.0) +
         std::lgamma((m + 1) / 2.0) - std::lgamma(m / 2.0 + 1.0);
}

}  // namespace

bool AllFinite(const Matrix& m) { return m.allFinite(); }

int NumericalRank(const Matrix& a, double rel_tol) {
  Require(AllFinite(a), "matrix has non-finite entries");
  if (a.size() == 0) return 0;
  const Eigen::VectorXd s = SingularValues(a);
  const double cut = rel_tol * s.maxCoeff();
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s[i] > cut) ++rank;
  }
  return rank;
}

NullSpaceMatrix NullSpace(const OutputMatrix& a, double rel_tol) {
  Require(rel_tol > 0.0 && rel_tol < 1.0, "rel_tol must lie in (0, 1)");
  Require(a.samples() >= 1 && a.dim() >= 1, "output matrix is empty");
  Require(AllFinite(a.data), "output matrix has non-finite entries");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(a.data),
                                        Eigen::ComputeFullV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double sigma_max = s.size() > 0 ? s.maxCoeff() : 0.0;
  const double cut = rel_tol * sigma_max;
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s[i] > cut) ++rank;
  }
  // Singular values are sorted in decreasing order, so the trailing columns
  // of V span the null space.
  const int q = a.samples();
  NullSpaceMatrix out;
  out.rank = rank;
  out.tolerance_used = cut;
  out.data = svd.matrixV().rightCols(q - rank);
  return out;
}

double Nsmd(const Matrix& a, const Matrix& n) {
  Require(a.cols() == n.rows(),
          "NSMD dimension mismatch: A has " + std::to_string(a.cols()) +
              " columns, N has " + std::to_string(n.rows()) + " rows");
  Require(a.rows() >= 1, "output matrix has no rows");
  Require(AllFinite(a) && AllFinite(n), "NSMD inputs must be finite");
  if (n.cols() == 0) return 0.0;
  const Matrix h = NormalizedRows(a) * NormalizedCols(n);
  return h.cwiseAbs().cwiseSqrt().sum() / static_cast<double>(a.rows());
}

double Nsmd(const OutputMatrix& a, const NullSpaceMatrix& n) {
  return Nsmd(a.data, n.data);
}

double ConditionEstimate(const Matrix& q) {
  const Eigen::VectorXd s = SingularValues(q);
  const double smin = s.minCoeff();
  if (!(smin > 0.0)) return std::numeric_limits<double>::infinity();
  return s.maxCoeff() / smin;
}

AttackMatrix GenerateQ(int d, uint64_t seed, double condition_cap) {
  Require(d >= 1, "attack matrix dimension must be >= 1");
  constexpr int kMaxRetries = 8;
  for (int attempt = 0; attempt <= kMaxRetries; ++attempt) {
    Rng rng(seed + attempt);
    Matrix q(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) q(i, j) = rng.Uniform();
    }
    const double cond = ConditionEstimate(q);
    if (cond <= condition_cap) {
      return AttackMatrix{std::move(q), cond, seed + attempt};
    }
  }
  Fail(ErrorCode::kNumerical,
       "could not draw an invertible attack matrix of dimension " +
           std::to_string(d) + " from seed " + std::to_string(seed));
}

double SinePowerIntegral(int m) {
  Require(m >= 0, "sine power must be non-negative");
  return std::exp(LogSinePowerIntegral(m));
}

AngleTheory TheoryDy(int m) {
  if (m < 3) {
    Fail(ErrorCode::kUnsupportedDimension,
         "angle theory needs dimension >= 3, got " + std::to_string(m));
  }
  const double log_ratio = std::lgamma(m / 2.0) - std::lgamma((m - 1) / 2.0);
  // DY = (2/sqrt(pi)) * Gamma(m/2)/Gamma((m-1)/2) * (I_{m-2} - I_m). With
  // I_m = (m-1)/m * I_{m-2} the difference is I_{m-2}/m, which avoids the
  // cancellation of two nearly equal integrals at large m.
  const double log_dy = std::log(2.0 / std::sqrt(std::numbers::pi)) +
                        log_ratio + LogSinePowerIntegral(m - 2) -
                        std::log(static_cast<double>(m));
  AngleTheory out;
  out.m = m;
  out.dy = std::exp(log_dy);
  out.expectation = 0.0;
  out.k_m = std::exp(log_ratio) / std::sqrt(std::numbers::pi);
  return out;
}

double NsmdLowerBound(int q, int p) {
  Require(p >= 0, "null space width must be non-negative");
  if (p == 0) return 0.0;
  return p * TheoryDy(q).dy;
}

AngleSample EmpiricalAngleDistribution(int m, int trials, uint64_t seed,
                                       int bins) {
  Require(m >= 2, "angle sampling needs dimension >= 2");
  Require(trials >= 1, "need at least one trial");
  Require(bins >= 1, "need at least one histogram bin");
  Rng rng(seed);
  AngleSample out;
  out.m = m;
  out.trials = trials;
  out.cos_histogram.assign(bins, 0);
  out.angle_histogram.assign(bins, 0);

  Vector a(m), b(m);
  double sum = 0.0, sum_sq = 0.0;
  for (int t = 0; t < trials; ++t) {
    // Normalized Gaussian vectors are uniform on the sphere.
    double na = 0.0, nb = 0.0;
    do {
      for (int i = 0; i < m; ++i) a[i] = rng.Normal();
      na = a.norm();
    } while (na == 0.0);
    do {
      for (int i = 0; i < m; ++i) b[i] = rng.Normal();
      nb = b.norm();
    } while (nb == 0.0);
    const double y = std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
    sum += y;
    sum_sq += y * y;
    const int cbin = std::min(bins - 1, static_cast<int>((y + 1.0) / 2.0 * bins));
    const int abin = std::min(
        bins - 1, static_cast<int>(std::acos(y) / std::numbers::pi * bins));
    ++out.cos_histogram[cbin];
    ++out.angle_histogram[abin];
  }
  out.mean = sum / trials;
  out.variance = trials > 1 ? (sum_sq - trials * out.mean * out.mean) /
                                  (trials - 1)
                            : 0.0;
  return out;
}

}  // namespace nsmark
