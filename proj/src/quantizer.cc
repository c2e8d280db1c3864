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

#include "m22/quantizer.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "m22/error.h"
#include "m22/integrate.h"
#include "m22/special.h"

namespace m22 {
namespace {

constexpr double kEmptyCellMass = 1e-14;
constexpr double kTailRelTol = 1e-12;
constexpr double kOriginCut = 1e-12;  // first panel starts at kOriginCut * s
constexpr int kMaxDoublings = 200;
constexpr std::size_t kCdfGridSize = 512;
constexpr double kInf = std::numeric_limits<double>::infinity();

using Moments = std::array<double, 3>;

Moments operator+(const Moments& a, const Moments& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}

// ∫ x^M (x - c)^2 dF over a cell given its partial moments.
double CellDistortion(const Moments& m, double c) { return m[2] - 2.0 * c * m[1] + c * c * m[0]; }

}  // namespace

Codebook CodebookFromCenters(std::vector<double> centers, double M, int rate) {
  Codebook cb;
  cb.M = M;
  cb.rate = rate;
  cb.thresholds.resize(centers.empty() ? 0 : centers.size() - 1);
  for (std::size_t i = 0; i + 1 < centers.size(); ++i) {
    cb.thresholds[i] = 0.5 * (centers[i] + centers[i + 1]);
  }
  cb.centers = std::move(centers);
  ValidateCodebook(cb);
  return cb;
}

void ValidateCodebook(const Codebook& cb) {
  if (cb.rate < 1 || cb.rate > 16) {
    throw Error(ErrorCode::kInvalidArgument, "codebook rate must lie in [1, 16]");
  }
  if (!(cb.M >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "codebook M must be >= 0");
  const std::size_t levels = std::size_t{1} << cb.rate;
  if (cb.centers.size() != levels || cb.thresholds.size() != levels - 1) {
    throw Error(ErrorCode::kInvalidArgument, "codebook must have 2^rate centers and 2^rate - 1 thresholds");
  }
  for (std::size_t i = 0; i < levels; ++i) {
    if (!std::isfinite(cb.centers[i])) {
      throw Error(ErrorCode::kInvalidArgument, "codebook centers must be finite");
    }
    if (i > 0 && !(cb.centers[i] > cb.centers[i - 1])) {
      throw Error(ErrorCode::kInvalidArgument, "codebook centers must be strictly increasing");
    }
  }
  for (std::size_t i = 0; i + 1 < levels; ++i) {
    const double mid = 0.5 * (cb.centers[i] + cb.centers[i + 1]);
    if (std::abs(cb.thresholds[i] - mid) > 1e-12 * std::max(1.0, std::abs(mid))) {
      throw Error(ErrorCode::kInvalidArgument, "codebook thresholds must be center midpoints");
    }
    if (i > 0 && !(cb.thresholds[i] > cb.thresholds[i - 1])) {
      throw Error(ErrorCode::kInvalidArgument, "codebook thresholds must be strictly increasing");
    }
  }
}

double WeightedDistortion(std::span<const double> g, std::span<const double> ghat, double M) {
  if (g.size() != ghat.size() || g.empty()) {
    throw Error(ErrorCode::kLengthMismatch, "weighted distortion needs equal non-empty lengths");
  }
  if (!(M >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "M must be >= 0");
  double acc = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    acc += std::pow(std::abs(g[j]), M) * std::abs(g[j] - ghat[j]);
  }
  return acc / static_cast<double>(g.size());
}

std::vector<double> MagnitudeSource::InitialCenters(std::size_t n) const {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = Quantile((static_cast<double>(i) + 0.5) / static_cast<double>(n));
  }
  return out;
}

// ---------------------------------------------------------------------------
// ContinuousMagnitude

ContinuousMagnitude::ContinuousMagnitude(const DistributionFit& fit, double M)
    : MagnitudeSource(M), fit_(fit) {
  ValidateFit(fit);
  if (!(M >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "M must be >= 0");
  const double s = fit.scale;
  log_scale_ = std::log(s);
  if (fit.family == Family::kGenNorm) {
    log_norm_ = std::log(fit.shape / s) - LogGamma(1.0 / fit.shape);
  } else {
    log_norm_ = std::log(fit.shape / s);
  }
  origin_cut_ = kOriginCut * s;

  // Upper integration limit for the weighted moments.
  double x = 8.0 * s;
  for (int i = 0; i < kMaxDoublings; ++i) {
    const Moments head = Integrate(0.0, x);
    const Moments tail = Integrate(x, 2.0 * x);
    if (tail[1] <= kTailRelTol * head[1] && tail[2] <= kTailRelTol * head[2]) break;
    x *= 2.0;
  }
  x_max_ = x;

  // Unweighted CDF table on a grid that is dense near the origin.
  auto mass = [this](double a, double b) {
    auto f = [this](double t) -> std::array<double, 1> {
      const double lz = std::log(t) - log_scale_;
      double lw = log_norm_ - std::exp(fit_.shape * lz);
      if (fit_.family == Family::kDWeibull) lw += (fit_.shape - 1.0) * lz;
      return {std::exp(lw)};
    };
    return IntegrateAdaptive<1>(f, a, b)[0];
  };
  double x_cdf = 8.0 * s;
  for (int i = 0; i < kMaxDoublings && mass(x_cdf, 2.0 * x_cdf) > kTailRelTol; ++i) x_cdf *= 2.0;
  cdf_x_.resize(kCdfGridSize + 1);
  cdf_p_.resize(kCdfGridSize + 1);
  cdf_x_[0] = 0.0;
  cdf_p_[0] = 0.0;
  for (std::size_t k = 1; k <= kCdfGridSize; ++k) {
    const double u = static_cast<double>(k) / static_cast<double>(kCdfGridSize);
    cdf_x_[k] = x_cdf * u * u;
    const double lo = std::max(cdf_x_[k - 1], origin_cut_);
    double piece = 0.0;
    if (k == 1) {
      // Leading-order mass on [0, origin_cut_].
      const double cut = origin_cut_;
      piece = fit_.family == Family::kGenNorm
                  ? std::exp(log_norm_) * cut
                  : std::pow(cut / s, fit_.shape);
    }
    cdf_p_[k] = cdf_p_[k - 1] + piece + mass(lo, cdf_x_[k]);
  }
  const double total = cdf_p_.back();
  for (auto& p : cdf_p_) p /= total;

  auto compand = [this](double a, double b) {
    auto f = [this](double t) -> std::array<double, 1> { return {std::cbrt(Integrand(t)[0])}; };
    return IntegrateAdaptive<1>(f, a, b)[0];
  };
  compand_x_.resize(kCdfGridSize + 1);
  compand_p_.resize(kCdfGridSize + 1);
  compand_x_[0] = 0.0;
  compand_p_[0] = 0.0;
  for (std::size_t k = 1; k <= kCdfGridSize; ++k) {
    const double u = static_cast<double>(k) / static_cast<double>(kCdfGridSize);
    compand_x_[k] = x_max_ * u * u;
    compand_p_[k] = compand_p_[k - 1] + compand(std::max(compand_x_[k - 1], origin_cut_), compand_x_[k]);
  }
  const double compand_total = compand_p_.back();
  for (auto& p : compand_p_) p /= compand_total;
}

std::array<double, 3> ContinuousMagnitude::Integrand(double x) const {
  const double lx = std::log(x);
  const double lz = lx - log_scale_;
  double lw = log_norm_ + weight_exponent() * lx - std::exp(fit_.shape * lz);
  if (fit_.family == Family::kDWeibull) lw += (fit_.shape - 1.0) * lz;
  const double w = std::exp(lw);
  return {w, w * x, w * x * x};
}

std::array<double, 3> ContinuousMagnitude::NearOrigin(double a, double b) const {
  // On [0, origin_cut_] the density is replaced by its leading power law.
  Moments out{};
  const double M = weight_exponent();
  for (int j = 0; j < 3; ++j) {
    if (fit_.family == Family::kGenNorm) {
      const double e = M + j + 1.0;
      out[j] = std::exp(log_norm_) * (std::pow(b, e) - std::pow(a, e)) / e;
    } else {
      const double c = fit_.shape;
      const double e = M + j + c;
      // (c/s) (x/s)^(c-1) = c s^-c x^(c-1)
      out[j] = c * std::pow(fit_.scale, -c) * (std::pow(b, e) - std::pow(a, e)) / e;
    }
  }
  return out;
}

std::array<double, 3> ContinuousMagnitude::Integrate(double a, double b) const {
  Moments out{};
  if (!(b > a)) return out;
  if (a < origin_cut_) {
    out = NearOrigin(a, std::min(b, origin_cut_));
    a = origin_cut_;
  }
  if (b > a) {
    out = out + IntegrateAdaptive<3>([this](double x) { return Integrand(x); }, a, b);
  }
  return out;
}

std::array<double, 3> ContinuousMagnitude::PartialMoments(double a, double b) const {
  a = std::max(a, 0.0);
  b = std::min(b, x_max_);
  return Integrate(a, b);
}

namespace {

// Piecewise-linear inverse of a tabulated CDF.
double InvertTable(const std::vector<double>& xs, const std::vector<double>& ps, double p) {
  p = std::clamp(p, 0.0, 1.0);
  const auto it = std::lower_bound(ps.begin(), ps.end(), p);
  if (it == ps.begin()) return xs.front();
  if (it == ps.end()) return xs.back();
  const std::size_t k = static_cast<std::size_t>(it - ps.begin());
  const double span = ps[k] - ps[k - 1];
  const double frac = span > 0.0 ? (p - ps[k - 1]) / span : 0.0;
  return xs[k - 1] + frac * (xs[k] - xs[k - 1]);
}

}  // namespace

double ContinuousMagnitude::Quantile(double p) const { return InvertTable(cdf_x_, cdf_p_, p); }

std::vector<double> ContinuousMagnitude::InitialCenters(std::size_t n) const {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = InvertTable(compand_x_, compand_p_,
                         (static_cast<double>(i) + 0.5) / static_cast<double>(n));
  }
  return out;
}

// ---------------------------------------------------------------------------
// DiscreteMagnitude

DiscreteMagnitude::DiscreteMagnitude(std::vector<double> points, std::vector<double> probs,
                                     double M)
    : MagnitudeSource(M) {
  if (points.empty() || points.size() != probs.size()) {
    throw Error(ErrorCode::kLengthMismatch, "discrete source needs matching non-empty points/probs");
  }
  if (!(M >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "M must be >= 0");
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return points[i] < points[j]; });
  double total = 0.0;
  for (auto i : order) {
    if (!(points[i] >= 0.0) || !(probs[i] >= 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "discrete magnitudes and probabilities must be >= 0");
    }
    points_.push_back(points[i]);
    probs_.push_back(probs[i]);
    total += probs[i];
  }
  if (!(total > 0.0)) throw Error(ErrorCode::kInvalidArgument, "discrete source has zero mass");
  for (auto& p : probs_) p /= total;
}

std::array<double, 3> DiscreteMagnitude::PartialMoments(double a, double b) const {
  Moments out{};
  const double M = weight_exponent();
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const double x = points_[i];
    if (x < a || x >= b) continue;
    const double w = probs_[i] * std::pow(x, M);
    out[0] += w;
    out[1] += w * x;
    out[2] += w * x * x;
  }
  return out;
}

double DiscreteMagnitude::Quantile(double p) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    acc += probs_[i];
    if (acc >= p) return points_[i];
  }
  return points_.back();
}

std::vector<double> DiscreteMagnitude::InitialCenters(std::size_t n) const {
  const std::size_t P = points_.size();
  if (n == 0 || P > kExactInitLimit || n > P) return MagnitudeSource::InitialCenters(n);
  const double M = weight_exponent();
  // Prefix sums of the weighted moments make any run's cost O(1).
  std::vector<double> s0(P + 1, 0.0), s1(P + 1, 0.0), s2(P + 1, 0.0), c0(P + 1, 0.0), c1(P + 1, 0.0);
  for (std::size_t i = 0; i < P; ++i) {
    const double x = points_[i];
    const double w = probs_[i] * std::pow(x, M);
    s0[i + 1] = s0[i] + w;
    s1[i + 1] = s1[i] + w * x;
    s2[i + 1] = s2[i] + w * x * x;
    c0[i + 1] = c0[i] + 1.0;
    c1[i + 1] = c1[i] + x;
  }
  // Weighted squared error of the run [i, j) about its centroid.
  auto cost = [&](std::size_t i, std::size_t j) {
    const double w0 = s0[j] - s0[i];
    if (!(w0 > 0.0)) return 0.0;
    const double w1 = s1[j] - s1[i];
    return std::max(0.0, s2[j] - s2[i] - w1 * w1 / w0);
  };
  auto centroid = [&](std::size_t i, std::size_t j) {
    const double w0 = s0[j] - s0[i];
    return w0 > 0.0 ? (s1[j] - s1[i]) / w0 : (c1[j] - c1[i]) / (c0[j] - c0[i]);
  };
  // best[k][j]: optimal cost of splitting the first j points into k runs.
  std::vector<std::vector<double>> best(n + 1, std::vector<double>(P + 1, kInf));
  std::vector<std::vector<std::size_t>> cut(n + 1, std::vector<std::size_t>(P + 1, 0));
  best[0][0] = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    for (std::size_t j = k; j <= P; ++j) {
      for (std::size_t i = k - 1; i < j; ++i) {
        const double v = best[k - 1][i] + cost(i, j);
        if (v < best[k][j]) {
          best[k][j] = v;
          cut[k][j] = i;
        }
      }
    }
  }
  std::vector<double> centers(n);
  std::size_t j = P;
  for (std::size_t k = n; k >= 1; --k) {
    const std::size_t i = cut[k][j];
    centers[k - 1] = centroid(i, j);
    j = i;
  }
  return centers;
}

// ---------------------------------------------------------------------------
// Lloyd design

namespace {

std::vector<Moments> CellMoments(const MagnitudeSource& src, const std::vector<double>& centers) {
  const std::size_t n = centers.size();
  std::vector<Moments> out(n);
  double lo = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double hi = i + 1 < n ? 0.5 * (centers[i] + centers[i + 1]) : kInf;
    out[i] = src.PartialMoments(lo, hi);
    lo = hi;
  }
  return out;
}

double TotalDistortion(const std::vector<Moments>& cells, const std::vector<double>& centers) {
  double d = 0.0;
  for (std::size_t i = 0; i < cells.size(); ++i) d += CellDistortion(cells[i], centers[i]);
  return d;
}

// Drops the center of an empty cell and splits the cell with the largest
// distortion at its centroid. Returns false when no cell can be split.
bool Reseed(const MagnitudeSource& src, std::vector<double>& centers,
            const std::vector<Moments>& cells, std::size_t empty) {
  const std::size_t n = centers.size();
  std::size_t worst = n;
  double worst_d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == empty || cells[i][0] < kEmptyCellMass) continue;
    const double d = CellDistortion(cells[i], centers[i]);
    if (d > worst_d) {
      worst_d = d;
      worst = i;
    }
  }
  if (worst == n) return false;
  const double lo = worst == 0 ? 0.0 : 0.5 * (centers[worst - 1] + centers[worst]);
  const double hi = worst + 1 < n ? 0.5 * (centers[worst] + centers[worst + 1]) : kInf;
  const double centroid = cells[worst][1] / cells[worst][0];
  const Moments left = src.PartialMoments(lo, centroid);
  const Moments right = src.PartialMoments(centroid, hi);
  double a = centroid * (1.0 - 1e-3);
  double b = centroid * (1.0 + 1e-3);
  if (left[0] >= kEmptyCellMass && right[0] >= kEmptyCellMass) {
    a = left[1] / left[0];
    b = right[1] / right[0];
  }
  std::vector<double> next;
  next.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i == empty) continue;
    if (i == worst) {
      next.push_back(a);
      next.push_back(b);
    } else {
      next.push_back(centers[i]);
    }
  }
  std::sort(next.begin(), next.end());
  centers = std::move(next);
  return true;
}

Codebook Mirror(const std::vector<double>& half, double mu, double M, int rate) {
  std::vector<double> full;
  full.reserve(2 * half.size());
  for (auto it = half.rbegin(); it != half.rend(); ++it) full.push_back(mu - *it);
  for (double h : half) full.push_back(mu + h);
  return CodebookFromCenters(std::move(full), M, rate);
}

}  // namespace

namespace {

constexpr std::size_t kAndersonDepth = 16;
// A candidate whose distortion exceeds the last accepted value by more than
// this relative margin is rejected.
constexpr double kAcceptSlack = 1e-12;

// Solves the small dense system a * x = b in place (partial pivoting).
// Returns false when the system is numerically singular.
bool SolveDense(std::vector<double>& a, std::vector<double>& b, std::size_t m) {
  for (std::size_t col = 0; col < m; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < m; ++r) {
      if (std::abs(a[r * m + col]) > std::abs(a[piv * m + col])) piv = r;
    }
    if (!(std::abs(a[piv * m + col]) > 1e-300)) return false;
    if (piv != col) {
      for (std::size_t c = 0; c < m; ++c) std::swap(a[col * m + c], a[piv * m + c]);
      std::swap(b[col], b[piv]);
    }
    for (std::size_t r = col + 1; r < m; ++r) {
      const double f = a[r * m + col] / a[col * m + col];
      for (std::size_t c = col; c < m; ++c) a[r * m + c] -= f * a[col * m + c];
      b[r] -= f * b[col];
    }
  }
  for (std::size_t i = m; i-- > 0;) {
    double acc = b[i];
    for (std::size_t c = i + 1; c < m; ++c) acc -= a[i * m + c] * b[c];
    b[i] = acc / a[i * m + i];
  }
  return true;
}

// Anderson mixing over the recent (x, G(x)) pairs of the Lloyd map G.
class AndersonMixer {
 public:
  void Clear() {
    xs_.clear();
    gs_.clear();
  }

  // Records a pair and returns the mixed next iterate, or G(x) itself when
  // there is no usable history.
  std::vector<double> Push(const std::vector<double>& x, const std::vector<double>& g) {
    xs_.push_back(x);
    gs_.push_back(g);
    if (xs_.size() > kAndersonDepth + 1) {
      xs_.erase(xs_.begin());
      gs_.erase(gs_.begin());
    }
    const std::size_t m = xs_.size() - 1;
    if (m == 0) return g;
    const std::size_t n = x.size();
    auto residual = [&](std::size_t k, std::size_t i) { return gs_[k][i] - xs_[k][i]; };
    // dF_j = f_{j+1} - f_j
    std::vector<double> df(m * n);
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t i = 0; i < n; ++i) df[j * n + i] = residual(j + 1, i) - residual(j, i);
    }
    std::vector<double> gram(m * m, 0.0);
    std::vector<double> rhs(m, 0.0);
    double trace = 0.0;
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = 0; b < m; ++b) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += df[a * n + i] * df[b * n + i];
        gram[a * m + b] = acc;
      }
      trace += gram[a * m + a];
      for (std::size_t i = 0; i < n; ++i) rhs[a] += df[a * n + i] * residual(m, i);
    }
    for (std::size_t a = 0; a < m; ++a) gram[a * m + a] += 1e-12 * trace + 1e-300;
    if (!SolveDense(gram, rhs, m)) return g;
    std::vector<double> out = g;
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t i = 0; i < n; ++i) out[i] -= rhs[j] * (gs_[j + 1][i] - gs_[j][i]);
    }
    return out;
  }

 private:
  std::vector<std::vector<double>> xs_;
  std::vector<std::vector<double>> gs_;
};

bool StrictlyIncreasingPositive(const std::vector<double>& c) {
  if (c.empty() || !(c[0] > 0.0) || !std::isfinite(c.back())) return false;
  for (std::size_t i = 1; i < c.size(); ++i) {
    if (!(c[i] > c[i - 1])) return false;
  }
  return true;
}

}  // namespace

DesignReport DesignCodebookTraced(const MagnitudeSource& source, int rate,
                                  const DesignOptions& opts, double mu) {
  if (rate < 1 || rate > 8) throw Error(ErrorCode::kInvalidArgument, "design rate must lie in [1, 8]");
  const double M = source.weight_exponent();
  if (M > 12.0) throw Error(ErrorCode::kInvalidArgument, "design M must lie in [0, 12]");
  if (!(opts.tol > 0.0) || opts.max_iter < 1) {
    throw Error(ErrorCode::kInvalidArgument, "design needs tol > 0 and max_iter >= 1");
  }

  const std::size_t n = std::size_t{1} << (rate - 1);
  std::vector<double> centers = source.InitialCenters(n);

  DesignReport report;
  AndersonMixer mixer;
  int reseeds = 0;
  double movement = kInf;
  double accepted = kInf;      // distortion of the last accepted iterate
  bool candidate = false;      // centers came from Anderson mixing
  std::vector<double> fallback;  // Lloyd image of the last accepted iterate
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    report.iterations = iter + 1;
    const std::vector<Moments> cells = CellMoments(source, centers);
    std::size_t empty = n;
    for (std::size_t i = 0; i < n && empty == n; ++i) {
      if (!(cells[i][0] >= kEmptyCellMass)) empty = i;
    }
    const double dist = empty == n ? TotalDistortion(cells, centers) : kInf;
    if (candidate && !(dist <= accepted * (1.0 + kAcceptSlack))) {
      // Mixing overshot; fall back to the plain Lloyd step.
      mixer.Clear();
      centers = fallback;
      candidate = false;
      continue;
    }
    if (empty != n) {
      if (++reseeds > static_cast<int>(4 * n) || !Reseed(source, centers, cells, empty)) {
        throw Error(ErrorCode::kEmptyCell, "cannot re-seed an empty quantizer cell");
      }
      report.warnings.push_back("empty cell " + std::to_string(empty) + " re-seeded at sweep " +
                                std::to_string(iter));
      mixer.Clear();
      accepted = kInf;
      candidate = false;
      continue;
    }
    report.distortion_history.push_back(dist);
    accepted = dist;
    std::vector<double> image(n);
    movement = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      image[i] = cells[i][1] / cells[i][0];
      movement = std::max(movement, std::abs(image[i] - centers[i]) / std::max(1.0, std::abs(centers[i])));
    }
    if (movement < opts.tol) {
      centers = std::move(image);
      break;
    }
    std::vector<double> next = mixer.Push(centers, image);
    candidate = next != image && StrictlyIncreasingPositive(next);
    fallback = std::move(image);
    centers = candidate ? std::move(next) : fallback;
  }
  report.final_movement = movement;
  if (!(movement < opts.tol)) {
    if (!(movement <= 100.0 * opts.tol)) {
      throw Error(ErrorCode::kNonConvergence,
                  "Lloyd iteration stopped after " + std::to_string(report.iterations) +
                      " sweeps with movement " + std::to_string(movement));
    }
    report.warnings.push_back("max_iter reached with movement " + std::to_string(movement));
  }
  report.distortion_history.push_back(TotalDistortion(CellMoments(source, centers), centers));
  report.codebook = Mirror(centers, mu, M, rate);
  return report;
}

Codebook DesignCodebook(const DistributionFit& fit, int rate, double M, double tol, int max_iter) {
  const ContinuousMagnitude source(fit, M);
  return DesignCodebookTraced(source, rate, DesignOptions{tol, max_iter}, fit.mu).codebook;
}

double ExpectedDistortion(const Codebook& cb, const MagnitudeSource& source, double mu) {
  ValidateCodebook(cb);
  const std::size_t levels = cb.levels();
  double total = 0.0;
  for (std::size_t j = 0; j < levels; ++j) {
    const double lo = j == 0 ? -kInf : cb.thresholds[j - 1] - mu;
    const double hi = j + 1 < levels ? cb.thresholds[j] - mu : kInf;
    const double c = cb.centers[j] - mu;
    if (hi > 0.0) {
      // g = x on the positive side
      total += 0.5 * CellDistortion(source.PartialMoments(std::max(lo, 0.0), hi), c);
    }
    if (lo < 0.0) {
      // g = -x on the negative side: (g - c)^2 = (x + c)^2
      total += 0.5 * CellDistortion(source.PartialMoments(std::max(-hi, 0.0), -lo), -c);
    }
  }
  return total;
}

double ExpectedDistortion(const Codebook& cb, const DistributionFit& fit) {
  const ContinuousMagnitude source(fit, cb.M);
  return ExpectedDistortion(cb, source, fit.mu);
}

std::uint32_t QuantizeOne(double value, const Codebook& cb) {
  return static_cast<std::uint32_t>(
      std::upper_bound(cb.thresholds.begin(), cb.thresholds.end(), value) - cb.thresholds.begin());
}

std::vector<std::uint32_t> Quantize(std::span<const double> values, const Codebook& cb) {
  std::vector<std::uint32_t> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = QuantizeOne(values[i], cb);
  return out;
}

std::vector<double> Dequantize(std::span<const std::uint32_t> codes, const Codebook& cb) {
  std::vector<double> out(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (codes[i] >= cb.levels()) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  "code " + std::to_string(codes[i]) + " exceeds codebook size " +
                      std::to_string(cb.levels()));
    }
    out[i] = cb.centers[codes[i]];
  }
  return out;
}

}  // namespace m22
