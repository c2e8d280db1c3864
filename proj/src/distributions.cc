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

#include "m22/distributions.h"

#include <cmath>
#include <random>
#include <string>

#include "m22/error.h"
#include "m22/special.h"

namespace m22 {
namespace {

constexpr double kDegenerateVariance = 1e-12;
constexpr int kBisectionSteps = 200;

// E|X| / sqrt(E X^2) for GenNorm; increasing in beta.
double GenNormRatio(double beta) {
  return std::exp(LogGamma(2.0 / beta) -
                  0.5 * (LogGamma(1.0 / beta) + LogGamma(3.0 / beta)));
}

// E X^2 / (E|X|)^2 for d-Weibull; decreasing in c.
double DWeibullRatio(double c) {
  return std::exp(LogGamma(1.0 + 2.0 / c) - 2.0 * LogGamma(1.0 + 1.0 / c));
}

struct AbsMoments {
  double m1 = 0.0;  // mean |x|
  double m2 = 0.0;  // mean x^2
};

AbsMoments CheckedMoments(std::span<const double> samples) {
  if (samples.size() < kMinFitSamples) {
    throw Error(ErrorCode::kInvalidArgument,
                "fitting needs at least " + std::to_string(kMinFitSamples) + " samples");
  }
  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  AbsMoments m;
  for (double x : samples) {
    mean += x;
    m.m1 += std::abs(x);
    m.m2 += x * x;
  }
  mean /= n;
  m.m1 /= n;
  m.m2 /= n;
  double var = 0.0;
  for (double x : samples) var += (x - mean) * (x - mean);
  var /= n;
  if (var < kDegenerateVariance) {
    throw Error(ErrorCode::kDegenerateSample, "sample variance below 1e-12");
  }
  return m;
}

// Solves ratio(x) = target on [lo, hi] for a monotone ratio. Returns the
// clamped bound and sets *clamped when target lies outside the bracket.
template <typename Ratio>
double Bisect(Ratio ratio, double target, double lo, double hi, bool increasing,
              bool* clamped) {
  const double at_lo = ratio(lo);
  const double at_hi = ratio(hi);
  const double min_v = increasing ? at_lo : at_hi;
  const double max_v = increasing ? at_hi : at_lo;
  if (target <= min_v) {
    *clamped = true;
    return increasing ? lo : hi;
  }
  if (target >= max_v) {
    *clamped = true;
    return increasing ? hi : lo;
  }
  for (int i = 0; i < kBisectionSteps && hi - lo > 1e-14 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    const bool below = ratio(mid) < target;
    if (below == increasing) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::string_view FamilyName(Family family) {
  switch (family) {
    case Family::kGenNorm: return "gennorm";
    case Family::kDWeibull: return "dweibull";
  }
  return "unknown";
}

Family ParseFamily(std::string_view name) {
  if (name == "gennorm" || name == "GenNorm") return Family::kGenNorm;
  if (name == "dweibull" || name == "DWeibull" || name == "weibull") return Family::kDWeibull;
  throw Error(ErrorCode::kInvalidFamily, "unknown family '" + std::string(name) + "'");
}

void ValidateFit(const DistributionFit& fit) {
  if (!(fit.scale > 0.0) || !std::isfinite(fit.scale)) {
    throw Error(ErrorCode::kInvalidArgument, "scale must be positive and finite");
  }
  if (!(fit.shape > 0.0) || !std::isfinite(fit.shape)) {
    throw Error(ErrorCode::kInvalidArgument, "shape must be positive and finite");
  }
  if (fit.family == Family::kDWeibull && fit.shape > kDWeibullShapeMax) {
    throw Error(ErrorCode::kInvalidArgument, "d-Weibull shape must lie in (0, 1]");
  }
}

double GenNormPdf(double x, const DistributionFit& fit) {
  if (fit.family != Family::kGenNorm) {
    throw Error(ErrorCode::kInvalidFamily, "GenNormPdf called on a d-Weibull fit");
  }
  const double beta = fit.shape;
  const double z = std::abs(x - fit.mu) / fit.scale;
  const double log_norm = std::log(beta / (2.0 * fit.scale)) - LogGamma(1.0 / beta);
  return std::exp(log_norm - std::pow(z, beta));
}

double DWeibullPdf(double x, const DistributionFit& fit) {
  if (fit.family != Family::kDWeibull) {
    throw Error(ErrorCode::kInvalidFamily, "DWeibullPdf called on a GenNorm fit");
  }
  const double c = fit.shape;
  const double z = std::abs(x - fit.mu) / fit.scale;
  if (z == 0.0) {
    if (c < 1.0) {
      throw Error(ErrorCode::kSingularPoint, "d-Weibull density is unbounded at mu for c < 1");
    }
    return c / (2.0 * fit.scale);
  }
  return c / (2.0 * fit.scale) * std::pow(z, c - 1.0) * std::exp(-std::pow(z, c));
}

double Pdf(double x, const DistributionFit& fit) {
  return fit.family == Family::kGenNorm ? GenNormPdf(x, fit) : DWeibullPdf(x, fit);
}

double Variance(const DistributionFit& fit) {
  const double s2 = fit.scale * fit.scale;
  if (fit.family == Family::kGenNorm) {
    return s2 * std::exp(LogGamma(3.0 / fit.shape) - LogGamma(1.0 / fit.shape));
  }
  return s2 * std::exp(LogGamma(1.0 + 2.0 / fit.shape));
}

DistributionFit UnitVarianceMember(Family family, double shape) {
  DistributionFit fit{family, 0.0, 1.0, shape, false};
  ValidateFit(fit);
  fit.scale = 1.0 / std::sqrt(Variance(fit));
  return fit;
}

DistributionFit FitGenNorm(std::span<const double> samples) {
  const AbsMoments m = CheckedMoments(samples);
  DistributionFit fit{Family::kGenNorm, 0.0, 1.0, 2.0, false};
  fit.shape = Bisect(GenNormRatio, m.m1 / std::sqrt(m.m2), kGenNormShapeMin,
                     kGenNormShapeMax, /*increasing=*/true, &fit.clamped);
  fit.scale = std::sqrt(m.m2 * std::exp(LogGamma(1.0 / fit.shape) - LogGamma(3.0 / fit.shape)));
  return fit;
}

DistributionFit FitDWeibull(std::span<const double> samples) {
  const AbsMoments m = CheckedMoments(samples);
  DistributionFit fit{Family::kDWeibull, 0.0, 1.0, 1.0, false};
  // The bracket extends past 1 so that an over-range ratio is detected
  // before clamping into (0, 1].
  double c = Bisect(DWeibullRatio, m.m2 / (m.m1 * m.m1), kDWeibullShapeMin, 10.0,
                    /*increasing=*/false, &fit.clamped);
  if (c > kDWeibullShapeMax) {
    c = kDWeibullShapeMax;
    fit.clamped = true;
  }
  fit.shape = c;
  fit.scale = m.m1 / std::exp(LogGamma(1.0 + 1.0 / c));
  return fit;
}

DistributionFit Fit(Family family, std::span<const double> samples) {
  return family == Family::kGenNorm ? FitGenNorm(samples) : FitDWeibull(samples);
}

std::vector<double> Sample(const DistributionFit& fit, std::size_t n, std::uint64_t seed) {
  ValidateFit(fit);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> coin(0, 1);
  std::vector<double> out(n);
  if (fit.family == Family::kGenNorm) {
    std::gamma_distribution<double> gamma(1.0 / fit.shape, 1.0);
    const double inv = 1.0 / fit.shape;
    for (auto& x : out) {
      const double mag = fit.scale * std::pow(gamma(rng), inv);
      x = fit.mu + (coin(rng) ? mag : -mag);
    }
  } else {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double inv = 1.0 / fit.shape;
    for (auto& x : out) {
      const double u = 1.0 - unif(rng);  // (0, 1]
      const double mag = fit.scale * std::pow(-std::log(u), inv);
      x = fit.mu + (coin(rng) ? mag : -mag);
    }
  }
  return out;
}

NormalizedVector Normalize(std::span<const double> grad) {
  if (grad.size() < 2) {
    throw Error(ErrorCode::kDegenerateSample, "normalization needs at least two entries");
  }
  const double n = static_cast<double>(grad.size());
  double mean = 0.0;
  for (double x : grad) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : grad) var += (x - mean) * (x - mean);
  const double std = std::sqrt(var / n);
  if (!(std > 1e-12)) {
    throw Error(ErrorCode::kDegenerateSample, "standard deviation at most 1e-12");
  }
  NormalizedVector out;
  out.mean = mean;
  out.std = std;
  out.values.resize(grad.size());
  for (std::size_t i = 0; i < grad.size(); ++i) out.values[i] = (grad[i] - mean) / std;
  return out;
}

}  // namespace m22
