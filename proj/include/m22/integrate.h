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

#ifndef M22_INTEGRATE_H_
#define M22_INTEGRATE_H_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

namespace m22 {

struct GaussLegendreRule {
  static constexpr std::size_t kPoints = 32;
  std::array<double, kPoints> nodes;    // on [-1, 1]
  std::array<double, kPoints> weights;
};

const GaussLegendreRule& GaussLegendre32();

struct IntegrationOptions {
  double rel_tol = 1e-10;
  int max_depth = 64;
};

namespace internal {

template <std::size_t N, typename F>
std::array<double, N> GaussPanel(F& f, double a, double b) {
  const auto& rule = GaussLegendre32();
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  std::array<double, N> acc{};
  for (std::size_t k = 0; k < GaussLegendreRule::kPoints; ++k) {
    const std::array<double, N> v = f(mid + half * rule.nodes[k]);
    for (std::size_t i = 0; i < N; ++i) acc[i] += rule.weights[k] * v[i];
  }
  for (auto& x : acc) x *= half;
  return acc;
}

template <std::size_t N, typename F>
std::array<double, N> Refine(F& f, double a, double b, const std::array<double, N>& whole,
                             const std::array<double, N>& floor, int depth,
                             const IntegrationOptions& opts) {
  const double mid = 0.5 * (a + b);
  const auto left = GaussPanel<N>(f, a, mid);
  const auto right = GaussPanel<N>(f, mid, b);
  std::array<double, N> sum;
  bool converged = true;
  for (std::size_t i = 0; i < N; ++i) {
    sum[i] = left[i] + right[i];
    const double diff = std::abs(sum[i] - whole[i]);
    if (diff > opts.rel_tol * std::abs(sum[i]) && diff > floor[i]) converged = false;
  }
  if (converged || depth >= opts.max_depth || !(mid > a && mid < b)) return sum;
  const auto l = Refine<N>(f, a, mid, left, floor, depth + 1, opts);
  const auto r = Refine<N>(f, mid, b, right, floor, depth + 1, opts);
  for (std::size_t i = 0; i < N; ++i) sum[i] = l[i] + r[i];
  return sum;
}

}  // namespace internal

/// Adaptive Gauss-Legendre quadrature of a vector-valued integrand over a
/// finite interval. Panels are bisected until the 32-point estimate of each
/// component agrees with the sum over its halves to rel_tol (relative), or
/// until the disagreement is negligible against the whole-interval estimate.
/// Nodes are interior, so integrable endpoint singularities are never sampled.
template <std::size_t N, typename F>
std::array<double, N> IntegrateAdaptive(F&& f, double a, double b,
                                        const IntegrationOptions& opts = {}) {
  std::array<double, N> zero{};
  if (!(b > a)) return zero;
  const auto whole = internal::GaussPanel<N>(f, a, b);
  std::array<double, N> floor;
  for (std::size_t i = 0; i < N; ++i) floor[i] = 1e-3 * opts.rel_tol * std::abs(whole[i]);
  return internal::Refine<N>(f, a, b, whole, floor, 0, opts);
}

}  // namespace m22

#endif  // M22_INTEGRATE_H_
