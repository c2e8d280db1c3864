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

#include "m22/minifloat.h"

#include <algorithm>
#include <cmath>

#include "m22/error.h"

namespace m22 {

void ValidateFormat(const MinifloatFormat& fmt) {
  if (fmt.e < 1 || fmt.m < 0 || fmt.p != 1 + fmt.e + fmt.m || fmt.p > 16) {
    throw Error(ErrorCode::kInvalidArgument, "minifloat needs p = 1 + e + m, e >= 1, p <= 16");
  }
}

MinifloatFormat FormatForBits(int p) {
  switch (p) {
    case 8: return {8, 4, 3, 7};
    case 4: return {4, 2, 1, 1};
    default:
      throw Error(ErrorCode::kInvalidArgument,
                  "no minifloat layout for " + std::to_string(p) + " bits (use 4 or 8)");
  }
}

double DecodeMinifloat(std::uint32_t code, const MinifloatFormat& fmt) {
  const std::uint32_t mant = code & ((1u << fmt.m) - 1u);
  const std::uint32_t expo = (code >> fmt.m) & ((1u << fmt.e) - 1u);
  const bool negative = (code >> (fmt.e + fmt.m)) & 1u;
  const double frac = std::ldexp(static_cast<double>(mant), -fmt.m);
  const double mag = expo == 0 ? std::ldexp(frac, 1 - fmt.bias)
                               : std::ldexp(1.0 + frac, static_cast<int>(expo) - fmt.bias);
  return negative ? -mag : mag;
}

double MaxFinite(const MinifloatFormat& fmt) {
  return DecodeMinifloat((1u << (fmt.e + fmt.m)) - 1u, fmt);
}

std::uint32_t EncodeMinifloat(double value, const MinifloatFormat& fmt) {
  if (std::isnan(value)) throw Error(ErrorCode::kInvalidArgument, "cannot encode NaN as a minifloat");
  const std::uint32_t sign = std::signbit(value) ? 1u << (fmt.e + fmt.m) : 0u;
  const double mag = std::abs(value);
  // Positive codes are ordered like their values, so search the code range.
  std::uint32_t lo = 0;
  std::uint32_t hi = (1u << (fmt.e + fmt.m)) - 1u;
  if (mag >= DecodeMinifloat(hi, fmt)) return sign | hi;
  while (hi - lo > 1) {
    const std::uint32_t mid = lo + (hi - lo) / 2;
    if (DecodeMinifloat(mid, fmt) <= mag) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double below = mag - DecodeMinifloat(lo, fmt);
  const double above = DecodeMinifloat(hi, fmt) - mag;
  std::uint32_t pick = below < above ? lo : hi;
  if (below == above) pick = (lo & 1u) == 0 ? lo : hi;
  return sign | pick;
}

std::vector<double> EnumerateGrid(const MinifloatFormat& fmt) {
  ValidateFormat(fmt);
  std::vector<double> grid(std::size_t{1} << fmt.p);
  for (std::uint32_t c = 0; c < grid.size(); ++c) grid[c] = DecodeMinifloat(c, fmt);
  return grid;
}

std::vector<double> FpTruncate(std::span<const double> values, const MinifloatFormat& fmt) {
  ValidateFormat(fmt);
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = DecodeMinifloat(EncodeMinifloat(values[i], fmt), fmt);
  }
  return out;
}

}  // namespace m22
