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

#include "m22/compressors.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "m22/error.h"
#include "m22/minifloat.h"

namespace m22 {
namespace {

int IntegerRate(double rate, int lo, int hi, std::string_view what) {
  const long r = std::lround(rate);
  if (std::abs(rate - static_cast<double>(r)) > 1e-9 || r < lo || r > hi) {
    throw Error(ErrorCode::kInvalidArgument, std::string(what) + " rate must be an integer in [" +
                                                 std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return static_cast<int>(r);
}

CompressedUpdate SparseHeader(Scheme scheme, const SparseGradient& kept, int rate) {
  CompressedUpdate upd;
  upd.scheme = scheme;
  upd.dim = static_cast<std::uint32_t>(kept.dim);
  upd.K = static_cast<std::uint32_t>(kept.size());
  upd.rate = static_cast<std::uint8_t>(rate);
  upd.indices = kept.indices;
  return upd;
}

void Scatter(const CompressedUpdate& upd, std::span<const double> values, const Block& block,
             std::vector<double>& dense) {
  if (upd.dim != block.size) {
    throw Error(ErrorCode::kMalformedPayload, "payload dimension differs from block " + block.name);
  }
  for (std::size_t j = 0; j < upd.indices.size(); ++j) {
    dense[block.offset + upd.indices[j]] = values[j];
  }
}

// ---------------------------------------------------------------------------

class IdentityCompressor final : public Compressor {
 public:
  IdentityCompressor(std::size_t dim, std::vector<Block> blocks) : Compressor(dim, std::move(blocks)) {}

  std::string_view name() const override { return "identity"; }

  ClientMessage Compress(std::span<const double> grad) const override {
    ClientMessage msg;
    for (const Block& b : blocks()) {
      const SparseGradient all = TopK(grad.subspan(b.offset, b.size), b.size);
      CompressedUpdate upd = SparseHeader(Scheme::kIdentity, all, 64);
      upd.codes.reserve(b.size);
      for (double v : all.values) upd.codes.push_back(std::bit_cast<std::uint64_t>(v));
      msg.analytic_bits += AnalyticBits(upd);
      msg.parts.push_back(std::move(upd));
    }
    return msg;
  }

  std::vector<double> Decompress(const ClientMessage& msg) const override {
    std::vector<double> dense(dim(), 0.0);
    for (std::size_t p = 0; p < msg.parts.size(); ++p) {
      std::vector<double> values;
      for (std::uint64_t c : msg.parts[p].codes) values.push_back(std::bit_cast<double>(c));
      Scatter(msg.parts[p], values, blocks()[p], dense);
    }
    return dense;
  }
};

class M22Compressor final : public Compressor {
 public:
  M22Compressor(std::size_t dim, std::vector<Block> blocks, const CompressorSpec& spec,
                Family family, double M, std::shared_ptr<const CodebookTable> table, std::string name)
      : Compressor(dim, std::move(blocks)),
        spec_(spec),
        family_(family),
        M_(M),
        table_(std::move(table)),
        name_(std::move(name)) {}

  std::string_view name() const override { return name_; }

  ClientMessage Compress(std::span<const double> grad) const override {
    ClientMessage msg;
    for (const Block& b : blocks()) {
      const RateBudget budget = MakeBudget(b.size, spec_.bits_per_dim, spec_.rate);
      M22Result res = CompressM22Traced(grad.subspan(b.offset, b.size), budget, M_, family_, *table_,
                                        BlockOverride(spec_, dim(), b));
      msg.over_budget = msg.over_budget || res.over_budget;
      msg.analytic_bits += AnalyticBits(res.update);
      msg.parts.push_back(std::move(res.update));
    }
    return msg;
  }

  std::vector<double> Decompress(const ClientMessage& msg) const override {
    std::vector<double> dense(dim(), 0.0);
    for (std::size_t p = 0; p < msg.parts.size(); ++p) {
      const Block& b = blocks()[p];
      const std::vector<double> part = DecompressM22(msg.parts[p], *table_);
      if (part.size() != b.size) throw Error(ErrorCode::kMalformedPayload, "block size mismatch");
      std::copy(part.begin(), part.end(), dense.begin() + static_cast<std::ptrdiff_t>(b.offset));
    }
    return dense;
  }

  std::map<std::string, double> Parameters() const override {
    return {{"M", M_}, {"rate", spec_.rate}, {"shape_grid_size", double(table_->shape_grid().size())}};
  }

 private:
  CompressorSpec spec_;
  Family family_;
  double M_;
  std::shared_ptr<const CodebookTable> table_;
  std::string name_;
};

class UniformCompressor final : public Compressor {
 public:
  UniformCompressor(std::size_t dim, std::vector<Block> blocks, const CompressorSpec& spec)
      : Compressor(dim, std::move(blocks)), spec_(spec), rate_(IntegerRate(spec.rate, 1, 16, "uniform")) {}

  std::string_view name() const override { return "topk-uniform"; }

  ClientMessage Compress(std::span<const double> grad) const override {
    ClientMessage msg;
    for (const Block& b : blocks()) {
      const auto override_k = BlockOverride(spec_, dim(), b);
      const std::size_t K =
          override_k ? *override_k : SolveK(b.size, b.size * spec_.bits_per_dim, rate_);
      const SparseGradient kept = TopK(grad.subspan(b.offset, b.size), K);
      CompressedUpdate upd = SparseHeader(Scheme::kUniform, kept, rate_);
      if (K > 0) {
        const auto [lo, hi] = std::minmax_element(kept.values.begin(), kept.values.end());
        upd.mean = static_cast<float>(*lo);
        upd.std = static_cast<float>(*hi);
      }
      upd.codes.assign(K, 0);
      if (upd.mean < upd.std) {
        const Codebook cb = UniformCodebook(upd.mean, upd.std, rate_);
        for (std::size_t j = 0; j < K; ++j) upd.codes[j] = QuantizeOne(kept.values[j], cb);
      }
      msg.over_budget = msg.over_budget || AnalyticBits(upd) > b.size * spec_.bits_per_dim;
      msg.analytic_bits += AnalyticBits(upd);
      msg.parts.push_back(std::move(upd));
    }
    return msg;
  }

  std::vector<double> Decompress(const ClientMessage& msg) const override {
    std::vector<double> dense(dim(), 0.0);
    for (std::size_t p = 0; p < msg.parts.size(); ++p) {
      const CompressedUpdate& upd = msg.parts[p];
      CheckPayloadShape(upd);
      std::vector<double> values(upd.K, upd.mean);
      if (upd.mean < upd.std) {
        const Codebook cb = UniformCodebook(upd.mean, upd.std, upd.rate);
        values = Dequantize(std::vector<std::uint32_t>(upd.codes.begin(), upd.codes.end()), cb);
      }
      Scatter(upd, values, blocks()[p], dense);
    }
    return dense;
  }

 private:
  CompressorSpec spec_;
  int rate_;
};

class MinifloatCompressor final : public Compressor {
 public:
  MinifloatCompressor(std::size_t dim, std::vector<Block> blocks, const CompressorSpec& spec, int p)
      : Compressor(dim, std::move(blocks)), spec_(spec), fmt_(FormatForBits(p)) {}

  std::string_view name() const override { return fmt_.p == 8 ? "topk-fp8" : "topk-fp4"; }

  ClientMessage Compress(std::span<const double> grad) const override {
    ClientMessage msg;
    for (const Block& b : blocks()) {
      const auto override_k = BlockOverride(spec_, dim(), b);
      const std::size_t K =
          override_k ? *override_k : SolveK(b.size, b.size * spec_.bits_per_dim, fmt_.p);
      const SparseGradient kept = TopK(grad.subspan(b.offset, b.size), K);
      CompressedUpdate upd = SparseHeader(Scheme::kMinifloat, kept, fmt_.p);
      const int shift = BlockShift(kept.values);
      upd.shape_token = static_cast<std::uint16_t>(static_cast<std::int16_t>(shift));
      for (double v : kept.values) upd.codes.push_back(EncodeMinifloat(std::ldexp(v, -shift), fmt_));
      msg.over_budget = msg.over_budget || AnalyticBits(upd) > b.size * spec_.bits_per_dim;
      msg.analytic_bits += AnalyticBits(upd);
      msg.parts.push_back(std::move(upd));
    }
    return msg;
  }

  std::vector<double> Decompress(const ClientMessage& msg) const override {
    std::vector<double> dense(dim(), 0.0);
    for (std::size_t p = 0; p < msg.parts.size(); ++p) {
      const CompressedUpdate& upd = msg.parts[p];
      CheckPayloadShape(upd);
      if (upd.rate != fmt_.p) throw Error(ErrorCode::kMalformedPayload, "minifloat width mismatch");
      const int shift = static_cast<std::int16_t>(upd.shape_token);
      std::vector<double> values;
      for (std::uint64_t c : upd.codes) {
        values.push_back(std::ldexp(DecodeMinifloat(static_cast<std::uint32_t>(c), fmt_), shift));
      }
      Scatter(upd, values, blocks()[p], dense);
    }
    return dense;
  }

 private:
  // Power-of-two scale that brings the block's largest magnitude inside the
  // format's finite range.
  int BlockShift(std::span<const double> values) const {
    double peak = 0.0;
    for (double v : values) peak = std::max(peak, std::abs(v));
    if (!(peak > 0.0) || !std::isfinite(peak)) return 0;
    const int shift = static_cast<int>(std::ceil(std::log2(peak / MaxFinite(fmt_))));
    return std::clamp(shift, -32768, 32767);
  }

  CompressorSpec spec_;
  MinifloatFormat fmt_;
};

class SketchCompressor final : public Compressor {
 public:
  SketchCompressor(std::size_t dim, std::vector<Block> blocks, const CompressorSpec& spec)
      : Compressor(dim, std::move(blocks)),
        spec_(spec),
        k_sketch_(spec.k_override ? *spec.k_override
                                  : SolveK(dim, dim * spec.bits_per_dim, spec.rate)),
        cells_(static_cast<std::size_t>(std::floor(spec.rate * static_cast<double>(k_sketch_)))),
        op_(dim, spec.sketch_depth, std::max<std::size_t>(1, cells_ / spec.sketch_depth),
            spec.sketch_seed) {
    if (k_sketch_ > dim) throw Error(ErrorCode::kInvalidArgument, "K override exceeds the dimension");
  }

  std::string_view name() const override { return "count-sketch"; }

  ClientMessage Compress(std::span<const double> grad) const override {
    const Sketch sk = SketchApply(op_, grad);
    CompressedUpdate upd;
    upd.scheme = Scheme::kSketch;
    upd.dim = static_cast<std::uint32_t>(dim());
    upd.K = static_cast<std::uint32_t>(sk.cells.size());
    upd.rate = 32;
    upd.codes.reserve(sk.cells.size());
    for (double c : sk.cells) {
      upd.codes.push_back(std::bit_cast<std::uint32_t>(static_cast<float>(c)));
    }
    ClientMessage msg;
    msg.analytic_bits = RateCost(dim(), k_sketch_, spec_.rate);
    msg.over_budget = msg.analytic_bits > dim() * spec_.bits_per_dim;
    msg.parts.push_back(std::move(upd));
    return msg;
  }

  std::vector<double> Decompress(const ClientMessage& msg) const override {
    return Densify(SketchRecoverTopK(Unpack(msg), op_, k_sketch_));
  }

  // Sketches are merged first and recovered once, which is where the
  // scheme's linearity pays off.
  std::vector<double> Aggregate(std::span<const ClientMessage> msgs) const override {
    std::vector<double> out(dim(), 0.0);
    if (msgs.empty()) return out;
    Sketch sum = Unpack(msgs[0]);
    for (std::size_t k = 1; k < msgs.size(); ++k) SketchAccumulate(sum, Unpack(msgs[k]));
    out = Densify(SketchRecoverTopK(sum, op_, k_sketch_));
    for (double& v : out) v /= static_cast<double>(msgs.size());
    return out;
  }

  std::map<std::string, double> Parameters() const override {
    return {{"k_sketch", double(k_sketch_)},
            {"r_sk", spec_.rate},
            {"sketch_cells_budget", double(cells_)},
            {"sketch_depth", double(op_.depth())},
            {"sketch_width", double(op_.width())},
            {"sketch_wire_bits", double(op_.depth() * op_.width() * 32)}};
  }

 private:
  Sketch Unpack(const ClientMessage& msg) const {
    if (msg.parts.size() != 1 || msg.parts[0].scheme != Scheme::kSketch ||
        msg.parts[0].codes.size() != op_.depth() * op_.width()) {
      throw Error(ErrorCode::kMalformedPayload, "sketch payload does not match the operator");
    }
    Sketch sk{op_.depth(), op_.width(), {}};
    sk.cells.reserve(msg.parts[0].codes.size());
    for (std::uint64_t c : msg.parts[0].codes) {
      sk.cells.push_back(std::bit_cast<float>(static_cast<std::uint32_t>(c)));
    }
    return sk;
  }

  CompressorSpec spec_;
  std::size_t k_sketch_;
  std::size_t cells_;
  SketchOperator op_;
};

}  // namespace

Codebook UniformCodebook(double min, double max, int R) {
  if (!(min < max)) throw Error(ErrorCode::kDegenerateRange, "uniform codebook needs min < max");
  if (R < 1 || R > 16) throw Error(ErrorCode::kInvalidArgument, "uniform codebook rate must be 1..16");
  const std::size_t L = std::size_t{1} << R;
  std::vector<double> centers(L);
  for (std::size_t i = 0; i < L; ++i) {
    centers[i] = min + (max - min) * static_cast<double>(i) / static_cast<double>(L - 1);
  }
  centers.back() = max;
  return CodebookFromCenters(std::move(centers), 0.0, R);
}

const std::vector<std::string>& SchemeNames() {
  static const std::vector<std::string> names = {"m22-gennorm", "m22-dweibull", "tinyscript",
                                                 "topk-uniform", "topk-fp8",    "topk-fp4",
                                                 "count-sketch", "identity"};
  return names;
}

Compressor::Compressor(std::size_t dim, std::vector<Block> blocks)
    : dim_(dim), blocks_(std::move(blocks)) {
  if (blocks_.empty()) blocks_.push_back(Block{"all", 0, dim});
  std::size_t next = 0;
  for (const Block& b : blocks_) {
    if (b.offset != next || b.size == 0) {
      throw Error(ErrorCode::kInvalidArgument, "blocks must partition the parameter vector in order");
    }
    next += b.size;
  }
  if (next != dim) throw Error(ErrorCode::kInvalidArgument, "blocks do not cover the parameter vector");
}

std::optional<std::size_t> Compressor::BlockOverride(const CompressorSpec& spec, std::size_t dim,
                                                     const Block& block) {
  if (!spec.k_override) return std::nullopt;
  if (*spec.k_override > dim) throw Error(ErrorCode::kInvalidArgument, "K override exceeds the dimension");
  if (block.size == dim) return spec.k_override;
  return static_cast<std::size_t>(static_cast<double>(*spec.k_override) *
                                  static_cast<double>(block.size) / static_cast<double>(dim));
}

std::vector<double> Compressor::Aggregate(std::span<const ClientMessage> msgs) const {
  std::vector<double> out(dim_, 0.0);
  for (const ClientMessage& msg : msgs) {
    const std::vector<double> part = Decompress(msg);
    for (std::size_t i = 0; i < dim_; ++i) out[i] += part[i];
  }
  if (!msgs.empty()) {
    for (double& v : out) v /= static_cast<double>(msgs.size());
  }
  return out;
}

void TableCache::Add(std::shared_ptr<const CodebookTable> table) {
  std::lock_guard<std::mutex> lock(mu_);
  tables_.push_back(std::move(table));
}

std::shared_ptr<const CodebookTable> TableCache::Get(Family family, int rate, double M) {
  std::lock_guard<std::mutex> lock(mu_);
  for (const auto& t : tables_) {
    if (t->family() == family && t->Covers(rate, M)) return t;
  }
  auto built = std::make_shared<const CodebookTable>(
      BuildTable(family, DefaultShapeGrid(family), {rate}, {M}, opts_));
  tables_.push_back(built);
  return built;
}

std::unique_ptr<Compressor> MakeCompressor(const CompressorSpec& spec, std::size_t dim,
                                           std::vector<Block> blocks, TableCache& tables) {
  const std::string& s = spec.scheme;
  if (s == "identity") return std::make_unique<IdentityCompressor>(dim, std::move(blocks));
  if (s == "m22-gennorm" || s == "m22-dweibull" || s == "tinyscript") {
    const bool tiny = s == "tinyscript";
    const Family family = s == "m22-gennorm" ? Family::kGenNorm : Family::kDWeibull;
    const double M = tiny ? 0.0 : spec.M;
    const int rate = IntegerRate(spec.rate, 1, 8, s);
    return std::make_unique<M22Compressor>(dim, std::move(blocks), spec, family, M,
                                           tables.Get(family, rate, M), s);
  }
  if (s == "topk-uniform") return std::make_unique<UniformCompressor>(dim, std::move(blocks), spec);
  if (s == "topk-fp8") return std::make_unique<MinifloatCompressor>(dim, std::move(blocks), spec, 8);
  if (s == "topk-fp4") return std::make_unique<MinifloatCompressor>(dim, std::move(blocks), spec, 4);
  if (s == "count-sketch") {
    if (!(spec.rate > 0.0)) throw Error(ErrorCode::kInvalidArgument, "count sketch needs r_sk > 0");
    if (spec.sketch_depth == 0) throw Error(ErrorCode::kInvalidArgument, "sketch depth must be >= 1");
    return std::make_unique<SketchCompressor>(dim, std::move(blocks), spec);
  }
  throw Error(ErrorCode::kUnknownScheme, "unknown scheme '" + s + "'");
}

}  // namespace m22
