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

#include "m22/special.h"

#include <array>
#include <cmath>
#include <numbers>

#include "m22/error.h"

namespace m22 {
namespace {

constexpr double kLanczosG = 7.0;
constexpr std::uint64_t kDirectSumLimit = 512;
constexpr std::array<double, 9> kLanczosCoeffs = {
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};

// ln Γ(x) for x >= 0.5 via the Lanczos series.
double LanczosLogGamma(double x) {
  x -= 1.0;
  double sum = kLanczosCoeffs[0];
  for (std::size_t i = 1; i < kLanczosCoeffs.size(); ++i) {
    sum += kLanczosCoeffs[i] / (x + static_cast<double>(i));
  }
  const double t = x + kLanczosG + 0.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (x + 0.5) * std::log(t) - t +
         std::log(sum);
}

}  // namespace

double LogGamma(double x) {
  if (!(x > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "LogGamma requires x > 0");
  }
  if (x == 1.0 || x == 2.0) return 0.0;
  if (x < 0.5) {
    // Γ(x) = Γ(x + 1) / x keeps the series in its accurate range.
    return LanczosLogGamma(x + 1.0) - std::log(x);
  }
  return LanczosLogGamma(x);
}

double Log2Binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) {
    throw Error(ErrorCode::kInvalidArgument, "Log2Binomial requires k <= n");
  }
  if (k == 0 || k == n) return 0.0;
  const std::uint64_t j = k < n - k ? k : n - k;
  if (j <= kDirectSumLimit) {
    // Summing positive terms keeps the relative error near j ulps, which the
    // log-gamma difference cannot guarantee when C(n, k) is small and n large.
    double ln = 0.0;
    for (std::uint64_t i = 1; i <= j; ++i) {
      ln += std::log(static_cast<double>(n - j + i) / static_cast<double>(i));
    }
    return ln / std::numbers::ln2;
  }
  const double nd = static_cast<double>(n);
  const double jd = static_cast<double>(j);
  const double ln = LogGamma(nd + 1.0) - LogGamma(jd + 1.0) - LogGamma(nd - jd + 1.0);
  return ln / std::numbers::ln2;
}

}  // namespace m22
