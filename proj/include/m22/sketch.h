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

#ifndef M22_SKETCH_H_
#define M22_SKETCH_H_

#include <cstdint>
#include <span>
#include <vector>

#include "m22/compression.h"

namespace m22 {

/// A count sketch shared by every client: the same (seed, d, depth, width)
/// always yields the same hashes. Each row uses two multiply-shift hashes,
/// one for the column and one for the sign.
class SketchOperator {
 public:
  SketchOperator(std::size_t dim, std::size_t depth, std::size_t width, std::uint64_t seed);

  /// depth 1, width d, h(i) = i and every sign +1; the sketch is the vector.
  static SketchOperator Identity(std::size_t dim);

  std::size_t dim() const { return dim_; }
  std::size_t depth() const { return depth_; }
  std::size_t width() const { return width_; }
  std::uint64_t seed() const { return seed_; }

  std::size_t Column(std::size_t row, std::size_t i) const;
  double Sign(std::size_t row, std::size_t i) const;

 private:
  SketchOperator() = default;

  struct RowHash {
    std::uint64_t a_col, b_col, a_sign, b_sign;
  };

  std::size_t dim_ = 0;
  std::size_t depth_ = 1;
  std::size_t width_ = 1;
  std::uint64_t seed_ = 0;
  bool identity_ = false;
  std::vector<RowHash> rows_;
};

// Row-major depth x width table of cells.
struct Sketch {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> cells;

  double at(std::size_t r, std::size_t c) const { return cells[r * cols + c]; }
  bool operator==(const Sketch&) const = default;
};

// cells[j][h_j(i)] += s_j(i) grad[i]. Throws kDimensionMismatch.
Sketch SketchApply(const SketchOperator& op, std::span<const double> grad);

// Entrywise sum; the server-side merge of client sketches.
void SketchAccumulate(Sketch& into, const Sketch& other);

// Median over rows of s_j(i) cells[j][h_j(i)] for every coordinate.
std::vector<double> SketchEstimate(const Sketch& sk, const SketchOperator& op);

// The K coordinates with the largest |estimate|, with their estimates.
SparseGradient SketchRecoverTopK(const Sketch& sk, const SketchOperator& op, std::size_t K);

}  // namespace m22

#endif  // M22_SKETCH_H_
