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

#include "m22/compression.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "m22/error.h"
#include "m22/quantizer.h"
#include "m22/special.h"

namespace m22 {

SparseGradient TopK(std::span<const double> grad, std::size_t K) {
  if (K > grad.size()) {
    throw Error(ErrorCode::kInvalidArgument, "topK: K exceeds the dimension");
  }
  SparseGradient out;
  out.dim = grad.size();
  if (K == 0) return out;
  std::vector<std::uint32_t> order(grad.size());
  std::iota(order.begin(), order.end(), 0u);
  auto before = [&](std::uint32_t a, std::uint32_t b) {
    const double ma = std::abs(grad[a]);
    const double mb = std::abs(grad[b]);
    return ma > mb || (ma == mb && a < b);
  };
  if (K < grad.size()) {
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(K - 1),
                     order.end(), before);
    order.resize(K);
  }
  std::sort(order.begin(), order.end());
  out.indices = std::move(order);
  out.values.reserve(K);
  for (std::uint32_t i : out.indices) out.values.push_back(grad[i]);
  return out;
}

std::vector<double> Densify(const SparseGradient& sparse) {
  std::vector<double> dense(sparse.dim, 0.0);
  for (std::size_t j = 0; j < sparse.indices.size(); ++j) {
    dense[sparse.indices[j]] = sparse.values[j];
  }
  return dense;
}

RateBudget MakeBudget(std::size_t dim, double bits_per_dim, double per_entry_bits) {
  if (!(bits_per_dim >= 0.0) || !(per_entry_bits > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "budget needs R >= 0 and per-entry bits > 0");
  }
  return RateBudget{dim, static_cast<double>(dim) * bits_per_dim, per_entry_bits};
}

double RateCost(std::size_t d, std::size_t K, double b) {
  if (K > d) throw Error(ErrorCode::kInvalidArgument, "rate cost: K exceeds d");
  return Log2Binomial(d, K) + static_cast<double>(K) * b;
}

std::size_t MonotonePrefixEnd(std::size_t d, double b) {
  if (d == 0) return 0;
  // Increment at K is b + log2((d - K + 1) / K), decreasing in K.
  auto ok = [&](std::size_t K) {
    return b + std::log2(static_cast<double>(d - K + 1) / static_cast<double>(K)) >= 0.0;
  };
  const double guess = static_cast<double>(d + 1) / (1.0 + std::exp2(-b));
  auto K = static_cast<std::size_t>(std::min(static_cast<double>(d), std::max(1.0, std::floor(guess))));
  while (K < d && ok(K + 1)) ++K;
  while (K > 1 && !ok(K)) --K;
  return K;
}

std::size_t SolveK(std::size_t d, double budget_bits, double b) {
  if (!(b > 0.0)) throw Error(ErrorCode::kInvalidArgument, "solve K: per-entry bits must be > 0");
  if (!(budget_bits >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "solve K: negative budget");
  std::size_t lo = 0;  // always feasible
  std::size_t hi = MonotonePrefixEnd(d, b);
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo + 1) / 2;
    if (RateCost(d, mid, b) <= budget_bits) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  return lo;
}

std::string_view SchemeName(Scheme scheme) {
  switch (scheme) {
    case Scheme::kIdentity: return "identity";
    case Scheme::kM22GenNorm: return "m22-gennorm";
    case Scheme::kM22DWeibull: return "m22-dweibull";
    case Scheme::kUniform: return "uniform";
    case Scheme::kMinifloat: return "minifloat";
    case Scheme::kSketch: return "sketch";
  }
  return "unknown";
}

bool HasIndexSet(Scheme scheme) { return scheme != Scheme::kSketch; }

Scheme M22Scheme(Family family) {
  return family == Family::kGenNorm ? Scheme::kM22GenNorm : Scheme::kM22DWeibull;
}

double AnalyticBits(const CompressedUpdate& upd) {
  if (!HasIndexSet(upd.scheme)) return static_cast<double>(upd.K) * upd.rate;
  return RateCost(upd.dim, upd.K, upd.rate);
}

void CheckPayloadShape(const CompressedUpdate& upd) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kMalformedPayload, what); };
  if (static_cast<std::uint8_t>(upd.scheme) > static_cast<std::uint8_t>(Scheme::kSketch)) {
    fail("unknown scheme byte");
  }
  if (upd.rate == 0 || upd.rate > 64) fail("code width must be 1..64 bits");
  if (upd.codes.size() != upd.K) fail("code count differs from K");
  if (HasIndexSet(upd.scheme)) {
    if (upd.K > upd.dim) fail("K exceeds d");
    if (upd.indices.size() != upd.K) fail("index count differs from K");
    for (std::size_t j = 0; j < upd.indices.size(); ++j) {
      if (upd.indices[j] >= upd.dim || (j > 0 && upd.indices[j] <= upd.indices[j - 1])) {
        fail("indices must be strictly increasing and below d");
      }
    }
  } else if (!upd.indices.empty()) {
    fail("sketch payloads carry no index set");
  }
  if (upd.rate < 64) {
    const std::uint64_t limit = std::uint64_t{1} << upd.rate;
    for (std::uint64_t c : upd.codes) {
      if (c >= limit) fail("code exceeds its bit width");
    }
  }
}

double DefaultShape(Family family) { return family == Family::kGenNorm ? 2.0 : 1.0; }

M22Result CompressM22Traced(std::span<const double> grad, const RateBudget& budget, double M,
                            Family family, const CodebookTable& table,
                            std::optional<std::size_t> k_override) {
  if (table.family() != family) {
    throw Error(ErrorCode::kTableMismatch, "codebook table family differs from the requested family");
  }
  if (budget.dim != grad.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "budget dimension differs from the gradient length");
  }
  if (grad.size() > UINT32_MAX) throw Error(ErrorCode::kInvalidArgument, "dimension exceeds 2^32 - 1");
  const long rate = std::lround(budget.per_entry_bits);
  if (rate < 1 || rate > 16) {
    throw Error(ErrorCode::kInvalidArgument, "per-entry rate must round to 1..16 bits");
  }
  const auto M_wire = static_cast<float>(M);

  const std::size_t K =
      k_override ? *k_override : SolveK(grad.size(), budget.total_bits, static_cast<double>(rate));
  if (K > grad.size()) throw Error(ErrorCode::kInvalidArgument, "K override exceeds the dimension");
  const SparseGradient kept = TopK(grad, K);

  M22Result res;
  CompressedUpdate& upd = res.update;
  upd.scheme = M22Scheme(family);
  upd.dim = static_cast<std::uint32_t>(grad.size());
  upd.K = static_cast<std::uint32_t>(K);
  upd.rate = static_cast<std::uint8_t>(rate);
  upd.M = M_wire;
  upd.indices = kept.indices;
  res.over_budget = RateCost(grad.size(), K, static_cast<double>(rate)) > budget.total_bits;
  res.fit = UnitVarianceMember(family, DefaultShape(family));

  // Both ends must agree on the table entry before any codes are produced.
  const std::uint16_t default_token = table.NearestShape(DefaultShape(family));
  table.Lookup(default_token, static_cast<int>(rate), M_wire);

  auto fallback = [&] {
    double sum = 0.0;
    for (double v : kept.values) sum += v;
    upd.mean = K ? static_cast<float>(sum / static_cast<double>(K)) : 0.0f;
    upd.std = 0.0f;
    upd.shape_token = default_token;
    upd.codes.assign(K, 0);
    res.fallback = true;
    return res;
  };
  if (K < 2) return fallback();

  NormalizedVector norm;
  try {
    norm = Normalize(kept.values);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDegenerateSample) throw;
    return fallback();
  }
  upd.mean = static_cast<float>(norm.mean);
  upd.std = static_cast<float>(norm.std);
  if (!(upd.std > 0.0f) || !std::isfinite(upd.std) || !std::isfinite(upd.mean)) return fallback();

  if (K >= kMinFitSamples) {
    res.fit = Fit(family, norm.values);
  } else {
    res.default_shape = true;
  }
  upd.shape_token = table.NearestShape(res.fit.shape);
  const Codebook& cb = table.Lookup(upd.shape_token, static_cast<int>(rate), M_wire);

  // Quantize against the transmitted (f32) normalization pair so the decoder
  // reconstructs exactly what the encoder measured.
  const double mean = upd.mean;
  const double std = upd.std;
  upd.codes.resize(K);
  for (std::size_t j = 0; j < K; ++j) {
    upd.codes[j] = QuantizeOne((kept.values[j] - mean) / std, cb);
  }
  return res;
}

CompressedUpdate CompressM22(std::span<const double> grad, const RateBudget& budget, double M,
                             Family family, const CodebookTable& table,
                             std::optional<std::size_t> k_override) {
  return CompressM22Traced(grad, budget, M, family, table, k_override).update;
}

std::vector<double> DecompressM22(const CompressedUpdate& upd, const CodebookTable& table) {
  if (upd.scheme != Scheme::kM22GenNorm && upd.scheme != Scheme::kM22DWeibull) {
    throw Error(ErrorCode::kMalformedPayload, "payload is not an M22 payload");
  }
  CheckPayloadShape(upd);
  if (M22Scheme(table.family()) != upd.scheme) {
    throw Error(ErrorCode::kTableMismatch, "payload family differs from the codebook table");
  }
  const Codebook& cb = table.Lookup(upd.shape_token, upd.rate, upd.M);
  std::vector<double> dense(upd.dim, 0.0);
  const double mean = upd.mean;
  const double std = upd.std;
  for (std::size_t j = 0; j < upd.K; ++j) {
    if (upd.codes[j] >= cb.levels()) {
      throw Error(ErrorCode::kMalformedPayload, "code index outside the codebook");
    }
    dense[upd.indices[j]] = std > 0.0 ? cb.centers[upd.codes[j]] * std + mean : mean;
  }
  return dense;
}

}  // namespace m22
