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

#ifndef M22_COMPRESSION_H_
#define M22_COMPRESSION_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "m22/codebook_table.h"
#include "m22/distributions.h"

namespace m22 {

// The K largest-magnitude entries of a dense vector, in index order.
struct SparseGradient {
  std::size_t dim = 0;
  std::vector<std::uint32_t> indices;  // strictly increasing, < dim
  std::vector<double> values;

  std::size_t size() const { return indices.size(); }
  bool operator==(const SparseGradient&) const = default;
};

/// Keeps the K largest |grad| entries; equal magnitudes prefer the lower
/// index. K = 0 gives an empty result.
SparseGradient TopK(std::span<const double> grad, std::size_t K);

// Dense vector with zeros off the support.
std::vector<double> Densify(const SparseGradient& sparse);

struct RateBudget {
  std::size_t dim = 0;
  double total_bits = 0.0;      // d * R
  double per_entry_bits = 1.0;  // b: bits spent on each kept value
};

// Budget of R bits per model dimension.
RateBudget MakeBudget(std::size_t dim, double bits_per_dim, double per_entry_bits);

/// Analytic cost of a K-sparse payload: log2 C(d, K) + K b.
double RateCost(std::size_t d, std::size_t K, double b);

/// Largest K whose cost fits the budget, searched over the prefix of K on
/// which the cost is non-decreasing (the increment b + log2((d-K+1)/K) is
/// non-negative). Returns 0 when even K = 1 is over budget.
std::size_t SolveK(std::size_t d, double budget_bits, double b);

// Upper end of the monotone prefix used by SolveK.
std::size_t MonotonePrefixEnd(std::size_t d, double b);

// Payload kinds. The value is the scheme byte on the wire.
enum class Scheme : std::uint8_t {
  kIdentity = 0,      // all d values as f64
  kM22GenNorm = 1,    // table codebook for a fitted GenNorm
  kM22DWeibull = 2,   // table codebook for a fitted d-Weibull
  kUniform = 3,       // evenly spaced codebook between min and max
  kMinifloat = 4,     // p-bit float codes with a power-of-two block scale
  kSketch = 5,        // count-sketch cells as f32
};

std::string_view SchemeName(Scheme scheme);
bool HasIndexSet(Scheme scheme);
Scheme M22Scheme(Family family);

/// A wire-ready payload. Field use by scheme:
///   M22       mean/std are the normalization pair, shape_token the grid index
///   uniform   mean/std hold the codebook min/max
///   minifloat shape_token holds the block scale exponent as int16
///   sketch    K is the number of cells and codes hold f32 bit patterns
/// A std of zero on M22 or min == max on uniform marks the single-value
/// fallback: every kept entry decodes to `mean`.
struct CompressedUpdate {
  Scheme scheme = Scheme::kIdentity;
  std::uint32_t dim = 0;
  std::uint32_t K = 0;
  std::uint8_t rate = 0;  // bits per code
  float M = 0.0f;
  std::uint16_t shape_token = 0;
  float mean = 0.0f;
  float std = 0.0f;
  std::vector<std::uint32_t> indices;
  std::vector<std::uint64_t> codes;

  bool operator==(const CompressedUpdate&) const = default;
};

// Analytic bits: RateCost(d, K, rate) for sparse schemes, K * rate for
// sketches. Header fields are side information and not counted.
double AnalyticBits(const CompressedUpdate& upd);

// Throws kMalformedPayload unless sizes, index order and code widths agree.
void CheckPayloadShape(const CompressedUpdate& upd);

struct M22Result {
  CompressedUpdate update;
  DistributionFit fit;    // fitted on the normalized kept values
  bool fallback = false;  // single-value payload
  bool default_shape = false;  // too few kept values to fit
  bool over_budget = false;    // only possible with a K override
};

/// topK -> normalize -> fit -> nearest-shape table lookup -> quantize.
/// The per-entry rate is budget.per_entry_bits rounded to an integer.
M22Result CompressM22Traced(std::span<const double> grad, const RateBudget& budget, double M,
                            Family family, const CodebookTable& table,
                            std::optional<std::size_t> k_override = std::nullopt);

CompressedUpdate CompressM22(std::span<const double> grad, const RateBudget& budget, double M,
                             Family family, const CodebookTable& table,
                             std::optional<std::size_t> k_override = std::nullopt);

/// Dense reconstruction; zeros off the index set. Throws kTableMismatch when
/// the table cannot serve the payload.
std::vector<double> DecompressM22(const CompressedUpdate& upd, const CodebookTable& table);

// Shapes used when a block keeps fewer values than a fit needs.
double DefaultShape(Family family);

}  // namespace m22

#endif  // M22_COMPRESSION_H_
