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

#include "m22/codec.h"

#include <bit>
#include <cstring>

#include "m22/enumerative.h"
#include "m22/error.h"

namespace m22 {
namespace {

constexpr std::uint8_t kMagic[4] = {'M', '2', '2', '\0'};

class BitWriter {
 public:
  explicit BitWriter(std::vector<std::uint8_t>& out) : out_(out) {}

  void Put(std::uint64_t value, unsigned bits) {
    for (unsigned b = 0; b < bits; ++b) PutBit((value >> b) & 1u);
  }

  void PutBit(unsigned bit) {
    if (used_ == 0) out_.push_back(0);
    out_.back() |= static_cast<std::uint8_t>(bit << used_);
    used_ = (used_ + 1) & 7u;
  }

 private:
  std::vector<std::uint8_t>& out_;
  unsigned used_ = 0;
};

class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> in) : in_(in) {}

  unsigned GetBit() {
    if (pos_ >= in_.size() * 8) {
      throw Error(ErrorCode::kTruncatedStream, "payload ends inside the bitstream");
    }
    const unsigned bit = (in_[pos_ >> 3] >> (pos_ & 7u)) & 1u;
    ++pos_;
    return bit;
  }

  std::uint64_t Get(unsigned bits) {
    std::uint64_t v = 0;
    for (unsigned b = 0; b < bits; ++b) v |= static_cast<std::uint64_t>(GetBit()) << b;
    return v;
  }

  std::size_t position() const { return pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void PutLe(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t GetLe(std::span<const std::uint8_t> in, std::size_t at, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(in[at + i]) << (8 * i);
  return v;
}

}  // namespace

std::uint64_t BodyBits(const CompressedUpdate& upd) {
  const std::uint64_t index_bits = HasIndexSet(upd.scheme) ? SubsetRankBits(upd.dim, upd.K) : 0;
  return index_bits + static_cast<std::uint64_t>(upd.K) * upd.rate;
}

std::vector<std::uint8_t> Encode(const CompressedUpdate& upd) {
  CheckPayloadShape(upd);
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  out.reserve(kHeaderBytes + (BodyBits(upd) + 7) / 8);
  out.push_back(kWireVersion);
  out.push_back(static_cast<std::uint8_t>(upd.scheme));
  PutLe(out, upd.dim, 4);
  PutLe(out, upd.K, 4);
  out.push_back(upd.rate);
  PutLe(out, std::bit_cast<std::uint32_t>(upd.M), 4);
  PutLe(out, upd.shape_token, 2);
  PutLe(out, std::bit_cast<std::uint32_t>(upd.mean), 4);
  PutLe(out, std::bit_cast<std::uint32_t>(upd.std), 4);

  BitWriter bits(out);
  if (HasIndexSet(upd.scheme)) {
    const mpz_class rank = RankSubset(upd.indices, upd.dim);
    const std::uint64_t width = SubsetRankBits(upd.dim, upd.K);
    for (std::uint64_t b = 0; b < width; ++b) {
      bits.PutBit(static_cast<unsigned>(mpz_tstbit(rank.get_mpz_t(), b)));
    }
  }
  for (std::uint64_t c : upd.codes) bits.Put(c, upd.rate);
  return out;
}

CompressedUpdate Decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes) {
    throw Error(ErrorCode::kTruncatedStream, "payload shorter than its header");
  }
  if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw Error(ErrorCode::kMalformedPayload, "bad magic");
  }
  if (bytes[4] != kWireVersion) {
    throw Error(ErrorCode::kVersionMismatch,
                "wire version " + std::to_string(bytes[4]) + " is not supported");
  }
  CompressedUpdate upd;
  if (bytes[5] > static_cast<std::uint8_t>(Scheme::kSketch)) {
    throw Error(ErrorCode::kMalformedPayload, "unknown scheme byte");
  }
  upd.scheme = static_cast<Scheme>(bytes[5]);
  upd.dim = static_cast<std::uint32_t>(GetLe(bytes, 6, 4));
  upd.K = static_cast<std::uint32_t>(GetLe(bytes, 10, 4));
  upd.rate = bytes[14];
  upd.M = std::bit_cast<float>(static_cast<std::uint32_t>(GetLe(bytes, 15, 4)));
  upd.shape_token = static_cast<std::uint16_t>(GetLe(bytes, 19, 2));
  upd.mean = std::bit_cast<float>(static_cast<std::uint32_t>(GetLe(bytes, 21, 4)));
  upd.std = std::bit_cast<float>(static_cast<std::uint32_t>(GetLe(bytes, 25, 4)));
  if (upd.rate == 0 || upd.rate > 64) throw Error(ErrorCode::kMalformedPayload, "bad code width");
  if (HasIndexSet(upd.scheme) && upd.K > upd.dim) {
    throw Error(ErrorCode::kMalformedPayload, "K exceeds d");
  }

  const std::span<const std::uint8_t> body = bytes.subspan(kHeaderBytes);
  const std::uint64_t body_bits = BodyBits(upd);
  if (body.size() * 8 < body_bits) {
    throw Error(ErrorCode::kTruncatedStream, "payload body is shorter than its header implies");
  }
  if (body.size() != (body_bits + 7) / 8) {
    throw Error(ErrorCode::kMalformedPayload, "trailing bytes after payload body");
  }
  BitReader bits(body);
  if (HasIndexSet(upd.scheme)) {
    const std::uint64_t width = SubsetRankBits(upd.dim, upd.K);
    mpz_class rank = 0;
    for (std::uint64_t b = 0; b < width; ++b) {
      if (bits.GetBit()) mpz_setbit(rank.get_mpz_t(), b);
    }
    upd.indices = UnrankSubset(rank, upd.dim, upd.K);
  }
  upd.codes.resize(upd.K);
  for (auto& c : upd.codes) c = bits.Get(upd.rate);
  while (bits.position() < body.size() * 8) {
    if (bits.GetBit()) throw Error(ErrorCode::kMalformedPayload, "non-zero padding bits");
  }
  CheckPayloadShape(upd);
  return upd;
}

}  // namespace m22
