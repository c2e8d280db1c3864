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

#ifndef M22_COMPRESSORS_H_
#define M22_COMPRESSORS_H_

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "m22/codebook_table.h"
#include "m22/compression.h"
#include "m22/quantizer.h"
#include "m22/sketch.h"

namespace m22 {

// 2^R evenly spaced centers from min to max inclusive, midpoint thresholds.
// Throws kDegenerateRange unless min < max.
Codebook UniformCodebook(double min, double max, int R);

// A named contiguous span of the flat parameter vector.
struct Block {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
};

// Everything one client uploads in a round.
struct ClientMessage {
  std::vector<CompressedUpdate> parts;
  double analytic_bits = 0.0;  // the rate the budget is charged
  bool over_budget = false;    // only possible with a K override
};

struct CompressorSpec {
  std::string scheme = "identity";
  double bits_per_dim = 1.0;  // R: budget d R bits per client per round
  double rate = 1.0;          // per-entry bits (R_mw, R_u, p or r_sk)
  double M = 0.0;
  std::optional<std::size_t> k_override;  // total K, split across blocks by size
  std::size_t sketch_depth = 5;
  std::uint64_t sketch_seed = 0;
};

// Known scheme names, in a stable order.
const std::vector<std::string>& SchemeNames();

/// Compressed uplink for a fixed parameter layout. Implementations are
/// immutable and safe to share between client threads.
class Compressor {
 public:
  virtual ~Compressor() = default;

  virtual std::string_view name() const = 0;

  virtual ClientMessage Compress(std::span<const double> grad) const = 0;
  virtual std::vector<double> Decompress(const ClientMessage& msg) const = 0;

  /// Server side: mean of the client reconstructions, reduced in client
  /// order so the result does not depend on thread timing.
  virtual std::vector<double> Aggregate(std::span<const ClientMessage> msgs) const;

  // Resolved sizing for the run manifest.
  virtual std::map<std::string, double> Parameters() const { return {}; }

  std::size_t dim() const { return dim_; }
  const std::vector<Block>& blocks() const { return blocks_; }

 protected:
  Compressor(std::size_t dim, std::vector<Block> blocks);

  // Per-block K override, proportional to block size.
  static std::optional<std::size_t> BlockOverride(const CompressorSpec& spec, std::size_t dim,
                                                  const Block& block);

 private:
  std::size_t dim_;
  std::vector<Block> blocks_;
};

/// Builds and caches one table per (family, rate, M) on the default shape
/// grid, or serves tables registered up front. Thread-safe.
class TableCache {
 public:
  explicit TableCache(TableOptions opts = {}) : opts_(opts) {}

  void Add(std::shared_ptr<const CodebookTable> table);
  std::shared_ptr<const CodebookTable> Get(Family family, int rate, double M);

 private:
  TableOptions opts_;
  std::mutex mu_;
  std::vector<std::shared_ptr<const CodebookTable>> tables_;
};

/// Throws kUnknownScheme for names outside SchemeNames(). `blocks` must
/// partition [0, dim); an empty list means one block.
std::unique_ptr<Compressor> MakeCompressor(const CompressorSpec& spec, std::size_t dim,
                                           std::vector<Block> blocks, TableCache& tables);

}  // namespace m22

#endif  // M22_COMPRESSORS_H_
