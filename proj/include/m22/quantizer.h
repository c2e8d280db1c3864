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

#ifndef M22_QUANTIZER_H_
#define M22_QUANTIZER_H_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "m22/distributions.h"

namespace m22 {

// A scalar quantizer with L = 2^rate reconstruction levels.
struct Codebook {
  std::vector<double> centers;     // strictly increasing, size L
  std::vector<double> thresholds;  // midpoints of adjacent centers, size L - 1
  double M = 0.0;                  // weight exponent the codebook was designed for
  int rate = 1;                    // bits per entry

  std::size_t levels() const { return centers.size(); }
  bool operator==(const Codebook&) const = default;
};

// Builds a codebook whose thresholds are the midpoints of `centers`.
Codebook CodebookFromCenters(std::vector<double> centers, double M, int rate);

// Throws kInvalidArgument when the sizes, ordering or midpoint rule fail.
void ValidateCodebook(const Codebook& cb);

/// (1/d) Σ |g_j|^M |g_j - ĝ_j|, with 0^0 = 1 so that M = 0 is the mean
/// absolute error.
double WeightedDistortion(std::span<const double> g, std::span<const double> ghat, double M);

/// The law of |g - mu| for a source symmetric about mu, seen through the
/// |g|^M weight. Quantizer design only ever needs these partial moments.
class MagnitudeSource {
 public:
  virtual ~MagnitudeSource() = default;

  double weight_exponent() const { return M_; }

  /// ∫_[a, b) x^(M + j) dF(x) for j = 0, 1, 2, where F is the law of the
  /// magnitude. b may be +infinity.
  virtual std::array<double, 3> PartialMoments(double a, double b) const = 0;

  /// Approximate inverse CDF of the magnitude.
  virtual double Quantile(double p) const = 0;

  /// Starting centers for an n-level half-line design, strictly increasing
  /// where the source allows it.
  virtual std::vector<double> InitialCenters(std::size_t n) const;

 protected:
  explicit MagnitudeSource(double M) : M_(M) {}

 private:
  double M_;
};

// Magnitude law of a fitted continuous distribution. Moments come from the
// adaptive Gauss-Legendre integrator on [0, x_max], where x_max is doubled
// from 8s until the tail of x^(M+2) f(x) is negligible.
class ContinuousMagnitude final : public MagnitudeSource {
 public:
  ContinuousMagnitude(const DistributionFit& fit, double M);

  std::array<double, 3> PartialMoments(double a, double b) const override;
  double Quantile(double p) const override;

  /// Quantiles of the companding density (x^M f(x))^(1/3), the asymptotic
  /// optimum point density for the weighted squared error.
  std::vector<double> InitialCenters(std::size_t n) const override;

  double upper_limit() const { return x_max_; }
  const DistributionFit& fit() const { return fit_; }

 private:
  std::array<double, 3> Integrand(double x) const;
  std::array<double, 3> NearOrigin(double a, double b) const;
  std::array<double, 3> Integrate(double a, double b) const;

  DistributionFit fit_;
  double log_norm_ = 0.0;  // log of the half-line density prefactor
  double log_scale_ = 0.0;
  double origin_cut_ = 0.0;
  double x_max_ = 0.0;
  std::vector<double> cdf_x_;
  std::vector<double> cdf_p_;
  std::vector<double> compand_x_;
  std::vector<double> compand_p_;
};

// Finite magnitude law: P(|g - mu| = points[i]) = probs[i].
class DiscreteMagnitude final : public MagnitudeSource {
 public:
  DiscreteMagnitude(std::vector<double> points, std::vector<double> probs, double M);

  std::array<double, 3> PartialMoments(double a, double b) const override;
  double Quantile(double p) const override;

  /// Centroids of the optimal partition of the sorted support into n runs,
  /// found by dynamic programming when the support has at most
  /// kExactInitLimit points (quantiles otherwise). Lloyd alone stalls in
  /// local optima on small discrete sources, especially for large M.
  std::vector<double> InitialCenters(std::size_t n) const override;

  static constexpr std::size_t kExactInitLimit = 2048;

  const std::vector<double>& points() const { return points_; }
  const std::vector<double>& probs() const { return probs_; }

 private:
  std::vector<double> points_;  // sorted, non-negative
  std::vector<double> probs_;
};

struct DesignOptions {
  double tol = 1e-7;   // on max center movement, relative to max(1, |c|)
  int max_iter = 500;  // full Lloyd sweeps
};

struct DesignReport {
  Codebook codebook;
  // Expected weighted squared error of the centers entering each sweep, and
  // of the returned codebook as the last element.
  std::vector<double> distortion_history;
  int iterations = 0;
  double final_movement = 0.0;
  std::vector<std::string> warnings;
};

/// Lloyd iteration for the |g|^M-weighted squared error. L/2 centers are
/// designed on the magnitude half-line and mirrored about `mu`, so the
/// result is exactly antisymmetric and has no center at mu.
DesignReport DesignCodebookTraced(const MagnitudeSource& source, int rate,
                                  const DesignOptions& opts = {}, double mu = 0.0);

Codebook DesignCodebook(const DistributionFit& fit, int rate, double M, double tol = 1e-7,
                        int max_iter = 500);

/// Σ_i ∫_cell_i |g - mu|^M (g - c_i)^2 pdf(g) dg for a source symmetric about mu.
double ExpectedDistortion(const Codebook& cb, const MagnitudeSource& source, double mu = 0.0);
double ExpectedDistortion(const Codebook& cb, const DistributionFit& fit);

/// Cell index of each value; a value on a threshold goes to the upper cell.
std::vector<std::uint32_t> Quantize(std::span<const double> values, const Codebook& cb);
std::uint32_t QuantizeOne(double value, const Codebook& cb);

std::vector<double> Dequantize(std::span<const std::uint32_t> codes, const Codebook& cb);

}  // namespace m22

#endif  // M22_QUANTIZER_H_
