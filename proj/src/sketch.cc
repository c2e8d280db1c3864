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

#include "m22/sketch.h"

#include <algorithm>
#include <random>

#include "m22/error.h"

namespace m22 {

SketchOperator::SketchOperator(std::size_t dim, std::size_t depth, std::size_t width,
                               std::uint64_t seed)
    : dim_(dim), depth_(depth), width_(width), seed_(seed) {
  if (depth == 0 || width == 0) {
    throw Error(ErrorCode::kInvalidArgument, "sketch depth and width must be >= 1");
  }
  std::mt19937_64 rng(seed);
  rows_.resize(depth);
  for (auto& r : rows_) {
    r.a_col = rng() | 1u;
    r.b_col = rng();
    r.a_sign = rng() | 1u;
    r.b_sign = rng();
  }
}

SketchOperator SketchOperator::Identity(std::size_t dim) {
  if (dim == 0) throw Error(ErrorCode::kInvalidArgument, "identity sketch needs d >= 1");
  SketchOperator op;
  op.dim_ = dim;
  op.depth_ = 1;
  op.width_ = dim;
  op.identity_ = true;
  return op;
}

std::size_t SketchOperator::Column(std::size_t row, std::size_t i) const {
  if (identity_) return i;
  const RowHash& h = rows_[row];
  // Top 32 bits of a*x + b, then mapped onto [0, width) by a multiply.
  const std::uint64_t top = (h.a_col * static_cast<std::uint64_t>(i) + h.b_col) >> 32;
  return static_cast<std::size_t>((top * width_) >> 32);
}

double SketchOperator::Sign(std::size_t row, std::size_t i) const {
  if (identity_) return 1.0;
  const RowHash& h = rows_[row];
  return ((h.a_sign * static_cast<std::uint64_t>(i) + h.b_sign) >> 63) ? -1.0 : 1.0;
}

Sketch SketchApply(const SketchOperator& op, std::span<const double> grad) {
  if (grad.size() != op.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "gradient length differs from the sketch dimension");
  }
  Sketch sk{op.depth(), op.width(), std::vector<double>(op.depth() * op.width(), 0.0)};
  for (std::size_t r = 0; r < op.depth(); ++r) {
    double* row = sk.cells.data() + r * sk.cols;
    for (std::size_t i = 0; i < grad.size(); ++i) row[op.Column(r, i)] += op.Sign(r, i) * grad[i];
  }
  return sk;
}

void SketchAccumulate(Sketch& into, const Sketch& other) {
  if (into.rows != other.rows || into.cols != other.cols) {
    throw Error(ErrorCode::kDimensionMismatch, "cannot merge sketches of different shapes");
  }
  for (std::size_t k = 0; k < into.cells.size(); ++k) into.cells[k] += other.cells[k];
}

std::vector<double> SketchEstimate(const Sketch& sk, const SketchOperator& op) {
  if (sk.rows != op.depth() || sk.cols != op.width()) {
    throw Error(ErrorCode::kDimensionMismatch, "sketch shape differs from its operator");
  }
  std::vector<double> est(op.dim());
  std::vector<double> votes(op.depth());
  for (std::size_t i = 0; i < op.dim(); ++i) {
    for (std::size_t r = 0; r < op.depth(); ++r) votes[r] = op.Sign(r, i) * sk.at(r, op.Column(r, i));
    const std::size_t mid = votes.size() / 2;
    std::nth_element(votes.begin(), votes.begin() + static_cast<std::ptrdiff_t>(mid), votes.end());
    double med = votes[mid];
    if (votes.size() % 2 == 0) {
      med = 0.5 * (med + *std::max_element(votes.begin(), votes.begin() + static_cast<std::ptrdiff_t>(mid)));
    }
    est[i] = med;
  }
  return est;
}

SparseGradient SketchRecoverTopK(const Sketch& sk, const SketchOperator& op, std::size_t K) {
  const std::vector<double> est = SketchEstimate(sk, op);
  return TopK(est, std::min(K, est.size()));
}

}  // namespace m22
