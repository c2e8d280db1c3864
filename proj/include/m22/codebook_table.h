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

#ifndef M22_CODEBOOK_TABLE_H_
#define M22_CODEBOOK_TABLE_H_

#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "m22/distributions.h"
#include "m22/quantizer.h"

namespace m22 {

/// Codebooks designed ahead of time for the zero-mean unit-variance member of
/// a family at each (shape, rate, M) grid point. Immutable once built.
class CodebookTable {
 public:
  static constexpr int kFormatVersion = 1;

  CodebookTable() = default;

  /// Takes ownership of pre-designed entries and validates every invariant.
  /// `entries` is indexed [shape][rate][M] in the order of the grids.
  CodebookTable(Family family, std::vector<double> shape_grid, std::vector<int> rates,
                std::vector<double> Ms, std::vector<Codebook> entries);

  Family family() const { return family_; }
  const std::vector<double>& shape_grid() const { return shape_grid_; }
  const std::vector<int>& rates() const { return rates_; }
  const std::vector<double>& Ms() const { return Ms_; }

  /// Index of the grid shape nearest to `shape` (ties to the lower index).
  std::uint16_t NearestShape(double shape) const;

  bool Covers(int rate, double M) const;

  /// Throws kTableMismatch when (token, rate, M) is not in the table.
  const Codebook& Lookup(std::uint16_t shape_token, int rate, double M) const;
  const Codebook& LookupShape(double shape, int rate, double M) const {
    return Lookup(NearestShape(shape), rate, M);
  }

  std::string ToJson() const;
  static CodebookTable FromJson(const std::string& text);

  void Save(const std::string& path) const;
  static CodebookTable Load(const std::string& path);

  bool operator==(const CodebookTable&) const = default;

 private:
  std::size_t RateIndex(int rate) const;
  std::size_t MIndex(double M) const;

  Family family_ = Family::kGenNorm;
  std::vector<double> shape_grid_;
  std::vector<int> rates_;
  std::vector<double> Ms_;
  std::vector<Codebook> entries_;
};

struct TableOptions {
  double tol = 1e-7;
  int max_iter = 500;
  unsigned threads = 0;  // 0 = hardware concurrency
};

/// Designs one codebook per (shape, rate, M). Entries are independent, so
/// they are built concurrently; the output does not depend on the thread
/// count. Design errors are rethrown naming the offending grid point.
CodebookTable BuildTable(Family family, const std::vector<double>& shape_grid,
                         const std::vector<int>& rates, const std::vector<double>& Ms,
                         const TableOptions& opts = {});

// Evenly spaced grid from `lo` to `hi` inclusive (within half a step).
std::vector<double> ShapeGrid(double lo, double hi, double step);

// Default grids: 0.3..3.0 for GenNorm and 0.3..1.0 for d-Weibull, step 0.05.
std::vector<double> DefaultShapeGrid(Family family);

}  // namespace m22

#endif  // M22_CODEBOOK_TABLE_H_
