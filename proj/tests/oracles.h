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

// Independent reference computations for the tests. Nothing here calls the
// library's integrator, log-gamma or ranking code.

#ifndef M22_TESTS_ORACLES_H_
#define M22_TESTS_ORACLES_H_

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "m22/distributions.h"
#include "m22/quantizer.h"

namespace oracle {

inline double GenNormPdf(double x, double mu, double s, double beta) {
  return beta / (2.0 * s * boost::math::tgamma(1.0 / beta)) * std::exp(-std::pow(std::abs(x - mu) / s, beta));
}

inline double DWeibullPdf(double x, double mu, double s, double c) {
  const double z = std::abs(x - mu) / s;
  return c / (2.0 * s) * std::pow(z, c - 1.0) * std::exp(-std::pow(z, c));
}

inline double Pdf(double x, const m22::DistributionFit& f) {
  return f.family == m22::Family::kGenNorm ? GenNormPdf(x, f.mu, f.scale, f.shape)
                                           : DWeibullPdf(x, f.mu, f.scale, f.shape);
}

// ∫_a^b f on a finite or semi-infinite range by tanh-sinh, which copes with
// the integrable endpoint singularity of the d-Weibull density.
// Non-finite values at the endpoints (0 * inf in the far tail, the density
// pole at zero) have zero measure and are dropped.
inline double Integrate(const std::function<double(double)>& f, double a, double b) {
  boost::math::quadrature::tanh_sinh<double> ts(15);
  auto safe = [&](double x) {
    const double v = f(x);
    return std::isfinite(v) ? v : 0.0;
  };
  return ts.integrate(safe, a, b, 1e-13);
}

// Mass of |X - mu| > t for the fitted law, in closed form via gamma_q.
inline double TailMass(const m22::DistributionFit& f, double t) {
  const double z = t / f.scale;
  if (f.family == m22::Family::kGenNorm) {
    return boost::math::gamma_q(1.0 / f.shape, std::pow(z, f.shape));
  }
  return std::exp(-std::pow(z, f.shape));
}

// Σ_cells ∫ |g|^M (g - c_i)^2 pdf(g) dg for a zero-mean fit, by quadrature
// over each cell with cell limits taken from the codebook thresholds.
inline double ExpectedDistortion(const m22::Codebook& cb, const m22::DistributionFit& f) {
  const double inf = std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (std::size_t i = 0; i < cb.centers.size(); ++i) {
    const double lo = i == 0 ? -inf : cb.thresholds[i - 1];
    const double hi = i + 1 == cb.centers.size() ? inf : cb.thresholds[i];
    const double c = cb.centers[i];
    auto g = [&](double x) {
      const double w = cb.M == 0.0 ? 1.0 : std::pow(std::abs(x), cb.M);
      return w * (x - c) * (x - c) * oracle::Pdf(x, f);
    };
    // Split at zero so the singular point is an endpoint.
    if (lo < 0.0 && hi > 0.0) {
      total += Integrate(g, lo, 0.0) + Integrate(g, 0.0, hi);
    } else {
      total += Integrate(g, lo, hi);
    }
  }
  return total;
}

// Exact log2 C(n, k) from the GMP big integer: C = m 2^e with m in [0.5, 1).
inline double Log2Binomial(unsigned long n, unsigned long k) {
  mpz_class c;
  mpz_bin_uiui(c.get_mpz_t(), n, k);
  long e = 0;
  const double m = mpz_get_d_2exp(&e, c.get_mpz_t());
  return static_cast<double>(e) + std::log2(m);
}

// Smallest weighted squared error over every placement of thresholds
// between the sorted magnitudes, using n reconstruction levels.
inline double BruteForceHalfLine(const std::vector<double>& x, const std::vector<double>& p, double M, int n) {
  const int P = static_cast<int>(x.size());
  double best = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << (P - 1)); ++mask) {
    if (__builtin_popcount(mask) > n - 1) continue;
    double total = 0.0;
    int start = 0;
    for (int i = 0; i < P; ++i) {
      if (i != P - 1 && !((mask >> i) & 1u)) continue;
      double w0 = 0, w1 = 0, w2 = 0;
      for (int j = start; j <= i; ++j) {
        const double w = p[j] * std::pow(x[j], M);
        w0 += w;
        w1 += w * x[j];
        w2 += w * x[j] * x[j];
      }
      if (w0 > 0.0) total += w2 - w1 * w1 / w0;
      start = i + 1;
    }
    best = std::min(best, total);
  }
  return best;
}

// Enumerate all k-subsets of [0, n) in lexicographic order.
inline std::vector<std::vector<std::uint32_t>> LexSubsets(unsigned n, unsigned k) {
  std::vector<std::vector<std::uint32_t>> out;
  std::vector<std::uint32_t> cur(k);
  for (unsigned i = 0; i < k; ++i) cur[i] = i;
  if (k > n) return out;
  while (true) {
    out.push_back(cur);
    int i = static_cast<int>(k) - 1;
    while (i >= 0 && cur[i] == n - k + static_cast<unsigned>(i)) --i;
    if (i < 0) break;
    ++cur[i];
    for (unsigned j = static_cast<unsigned>(i) + 1; j < k; ++j) cur[j] = cur[j - 1] + 1;
  }
  return out;
}

}  // namespace oracle

#endif  // M22_TESTS_ORACLES_H_
