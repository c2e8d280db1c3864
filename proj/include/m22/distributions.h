// Copyright 2026 The m22 Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#ifndef M22_DISTRIBUTIONS_H_
#define M22_DISTRIBUTIONS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace m22 {

// Two-degree-of-freedom models for gradient entries.
enum class Family : std::uint8_t {
  kGenNorm = 0,   // generalized normal, shape beta
  kDWeibull = 1,  // double-sided Weibull, shape c in (0, 1]
};

std::string_view FamilyName(Family family);
Family ParseFamily(std::string_view name);

struct DistributionFit {
  Family family = Family::kGenNorm;
  double mu = 0.0;
  double scale = 1.0;
  double shape = 2.0;
  // Set by the fitters when the moment ratio fell outside the invertible
  // range and the shape was clamped to a bound.
  bool clamped = false;

  bool operator==(const DistributionFit&) const = default;
};

// Throws kInvalidArgument unless scale > 0, shape > 0 and, for DWeibull,
// shape <= 1.
void ValidateFit(const DistributionFit& fit);

double GenNormPdf(double x, const DistributionFit& fit);
double DWeibullPdf(double x, const DistributionFit& fit);
double Pdf(double x, const DistributionFit& fit);

double Variance(const DistributionFit& fit);

// The zero-mean unit-variance member of a family for a given shape.
DistributionFit UnitVarianceMember(Family family, double shape);

inline constexpr std::size_t kMinFitSamples = 30;
inline constexpr double kGenNormShapeMin = 0.1;
inline constexpr double kGenNormShapeMax = 10.0;
inline constexpr double kDWeibullShapeMin = 0.05;
inline constexpr double kDWeibullShapeMax = 1.0;

/// Moment-ratio fit of a zero-location GenNorm. The shape solves
/// E|X| / sqrt(E X^2) = Γ(2/β) / sqrt(Γ(1/β) Γ(3/β)) by bisection.
DistributionFit FitGenNorm(std::span<const double> samples);

/// Moment-ratio fit of a zero-location d-Weibull. The shape solves
/// E X^2 / (E|X|)^2 = Γ(1 + 2/c) / Γ(1 + 1/c)^2 and is clamped to (0, 1].
DistributionFit FitDWeibull(std::span<const double> samples);

DistributionFit Fit(Family family, std::span<const double> samples);

/// n i.i.d. draws, deterministic for a fixed seed.
std::vector<double> Sample(const DistributionFit& fit, std::size_t n, std::uint64_t seed);

struct NormalizedVector {
  std::vector<double> values;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

// Zero-mean unit-variance rescaling; throws kDegenerateSample when the
// standard deviation is at most 1e-12.
NormalizedVector Normalize(std::span<const double> grad);

}  // namespace m22

#endif  // M22_DISTRIBUTIONS_H_
