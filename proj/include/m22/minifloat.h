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

#ifndef M22_MINIFLOAT_H_
#define M22_MINIFLOAT_H_

#include <cstdint>
#include <span>
#include <vector>

namespace m22 {

/// Sign, e exponent bits and m mantissa bits with IEEE-style subnormals.
/// Every exponent code is finite: there is no inf or NaN encoding, which
/// buys one more binade of range at these tiny widths.
struct MinifloatFormat {
  int p = 8;
  int e = 4;
  int m = 3;
  int bias = 7;

  bool operator==(const MinifloatFormat&) const = default;
};

// Throws kInvalidArgument unless p = 1 + e + m, e >= 1, m >= 0, p <= 16.
void ValidateFormat(const MinifloatFormat& fmt);

// (1,4,3) bias 7 for p = 8 and (1,2,1) bias 1 for p = 4.
MinifloatFormat FormatForBits(int p);

double DecodeMinifloat(std::uint32_t code, const MinifloatFormat& fmt);

// Nearest code, ties to an even mantissa; magnitudes past the largest
// finite value clamp to it. Throws kInvalidArgument on NaN.
std::uint32_t EncodeMinifloat(double value, const MinifloatFormat& fmt);

double MaxFinite(const MinifloatFormat& fmt);

// Every representable value, one per code (so +0 and -0 both appear).
std::vector<double> EnumerateGrid(const MinifloatFormat& fmt);

// Round each value onto the grid.
std::vector<double> FpTruncate(std::span<const double> values, const MinifloatFormat& fmt);

}  // namespace m22

#endif  // M22_MINIFLOAT_H_
