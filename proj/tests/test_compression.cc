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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "doctest.h"
#include "m22/codebook_table.h"
#include "m22/codec.h"
#include "m22/compression.h"
#include "m22/compressors.h"
#include "m22/enumerative.h"
#include "m22/error.h"
#include "oracles.h"

namespace {

using m22::ErrorCode;
using m22::Family;

template <typename F>
ErrorCode CodeOf(F&& f) {
  try {
    f();
  } catch (const m22::Error& e) {
    return e.code();
  }
  FAIL("expected an m22::Error");
  return ErrorCode::kInvalidArgument;
}

std::vector<double> HeavyTailed(std::size_t d, std::uint64_t seed) {
  return m22::Sample({Family::kGenNorm, 0.0, 1.0, 1.2}, d, seed);
}

const m22::CodebookTable& GenNormTable() {
  static const auto t = m22::BuildTable(Family::kGenNorm, m22::DefaultShapeGrid(Family::kGenNorm), {1, 2, 8},
                                        {0.0, 2.0});
  return t;
}

m22::CompressedUpdate RandomPayload(std::mt19937_64& rng) {
  using m22::Scheme;
  const Scheme schemes[] = {Scheme::kIdentity, Scheme::kM22GenNorm, Scheme::kM22DWeibull,
                            Scheme::kUniform,  Scheme::kMinifloat,  Scheme::kSketch};
  m22::CompressedUpdate u;
  u.scheme = schemes[rng() % 6];
  u.dim = 1 + rng() % 300;
  u.M = static_cast<float>(rng() % 5);
  u.shape_token = static_cast<std::uint16_t>(rng() % 60);
  u.mean = static_cast<float>(std::ldexp(static_cast<double>(rng() % 2001) - 1000.0, -7));
  u.std = static_cast<float>(std::ldexp(static_cast<double>(rng() % 1000), -9));
  if (u.scheme == Scheme::kSketch) {
    u.K = 1 + rng() % 64;
    u.rate = 32;
    for (std::uint32_t i = 0; i < u.K; ++i) u.codes.push_back(rng() & 0xffffffffu);
    return u;
  }
  u.K = static_cast<std::uint32_t>(rng() % (u.dim + 1));
  u.rate = u.scheme == Scheme::kIdentity ? 64 : u.scheme == Scheme::kMinifloat ? (rng() % 2 ? 8 : 4) : 1 + rng() % 8;
  std::vector<std::uint32_t> all(u.dim);
  std::iota(all.begin(), all.end(), 0u);
  std::shuffle(all.begin(), all.end(), rng);
  u.indices.assign(all.begin(), all.begin() + u.K);
  std::sort(u.indices.begin(), u.indices.end());
  const std::uint64_t mask = u.rate == 64 ? ~0ull : (1ull << u.rate) - 1;
  for (std::uint32_t i = 0; i < u.K; ++i) u.codes.push_back(rng() & mask);
  return u;
}

}  // namespace

TEST_CASE("topk keeps the largest magnitudes in index order") {
  const auto s = m22::TopK(std::vector<double>{3.0, -5.0, 1.0}, 2);
  CHECK(s.indices == std::vector<std::uint32_t>{0, 1});
  CHECK(s.values == std::vector<double>{3.0, -5.0});
  CHECK(m22::TopK(std::vector<double>{1.0, 2.0}, 0).size() == 0);

  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> g(200);
    for (auto& v : g) v = static_cast<double>(static_cast<int>(rng() % 21) - 10);  // many ties
    const std::size_t K = rng() % 201;
    std::vector<std::uint32_t> order(g.size());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return std::abs(g[a]) > std::abs(g[b]); });
    std::vector<std::uint32_t> want(order.begin(), order.begin() + K);
    std::sort(want.begin(), want.end());
    CHECK(m22::TopK(g, K).indices == want);
  }
  CHECK(CodeOf([] { m22::TopK(std::vector<double>{1.0}, 2); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("rate cost") {
  CHECK(m22::RateCost(10, 0, 4.0) == 0.0);
  CHECK(m22::RateCost(10, 10, 4.0) == doctest::Approx(40.0));
  CHECK(m22::RateCost(10, 3, 4.0) == doctest::Approx(std::log2(120.0) + 12.0).epsilon(1e-12));
  CHECK(m22::RateCost(10, 3, 4.0) == doctest::Approx(18.9069).epsilon(1e-5));
}

TEST_CASE("solve k") {
  CHECK(m22::SolveK(10, m22::RateCost(10, 3, 4.0) + 1e-9, 4.0) == 3);
  CHECK(m22::SolveK(4, 32.0, 8.0) == 4);
  CHECK(m22::SolveK(100, 0.0, 1.0) == 0);
  // Scan oracle: the largest K whose cost fits.
  std::mt19937_64 rng(3);
  for (int t = 0; t < 100; ++t) {
    const std::size_t d = 1 + rng() % 300;
    const double b = 1 + rng() % 8;
    const double budget = std::uniform_real_distribution<double>(0.0, d * b)(rng);
    std::size_t want = 0;
    for (std::size_t K = 0; K <= d; ++K) {
      if (oracle::Log2Binomial(d, K) + K * b <= budget) want = K;
    }
    CHECK(m22::SolveK(d, budget, b) == want);
  }
}

TEST_CASE("m22 compress stays within budget and reports its rate") {
  const auto g = HeavyTailed(5000, 8);
  const auto budget = m22::MakeBudget(g.size(), 1.0, 1.0);
  const auto r = m22::CompressM22Traced(g, budget, 2.0, Family::kGenNorm, GenNormTable());
  CHECK(r.update.K == m22::SolveK(g.size(), 5000.0, 1.0));
  CHECK(m22::AnalyticBits(r.update) <= budget.total_bits);
  CHECK_FALSE(r.fallback);
  CHECK_FALSE(r.over_budget);
  CHECK(m22::DecompressM22(r.update, GenNormTable()).size() == g.size());
}

TEST_CASE("m22 reproduces values that need no quantization") {
  // All kept values equal: the payload carries the common value exactly.
  std::vector<double> g(100, 0.0);
  for (std::size_t i = 0; i < 10; ++i) g[i * 7] = -0.375;
  const auto upd = m22::CompressM22(g, m22::MakeBudget(100, 1.0, 1.0), 2.0, Family::kGenNorm, GenNormTable(),
                                    std::size_t{10});
  CHECK(m22::DecompressM22(upd, GenNormTable()) == g);
}

TEST_CASE("more bits per entry never hurts") {
  const auto g = HeavyTailed(4000, 17);
  const auto kept = m22::TopK(g, 600);
  double prev = std::numeric_limits<double>::infinity();
  for (int rate : {1, 2, 8}) {
    const auto upd = m22::CompressM22(g, m22::MakeBudget(g.size(), 1.0, rate), 2.0, Family::kGenNorm,
                                      GenNormTable(), std::size_t{600});
    const auto dense = m22::DecompressM22(upd, GenNormTable());
    std::vector<double> back(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) back[i] = dense[kept.indices[i]];
    const double dist = m22::WeightedDistortion(kept.values, back, 2.0);
    CHECK(dist <= prev);
    prev = dist;
  }
}

TEST_CASE("m22 beats topk uniform on heavy tails at equal budget") {
  const auto g = HeavyTailed(10000, 23);
  m22::TableCache cache;
  m22::CompressorSpec m22s{"m22-gennorm", 1.0, 1.0, 2.0, std::nullopt, 5, 0};
  m22::CompressorSpec unis{"topk-uniform", 1.0, 1.0, 0.0, std::nullopt, 5, 0};
  const auto a = m22::MakeCompressor(m22s, g.size(), {}, cache);
  const auto b = m22::MakeCompressor(unis, g.size(), {}, cache);
  const double da = m22::WeightedDistortion(g, a->Decompress(a->Compress(g)), 2.0);
  const double db = m22::WeightedDistortion(g, b->Decompress(b->Compress(g)), 2.0);
  CHECK(da <= db);
}

TEST_CASE("m22 table family mismatch") {
  const auto g = HeavyTailed(500, 2);
  CHECK(CodeOf([&] {
          m22::CompressM22(g, m22::MakeBudget(500, 1.0, 1.0), 0.0, Family::kDWeibull, GenNormTable());
        }) == ErrorCode::kTableMismatch);
}

TEST_CASE("subset ranking is a lexicographic bijection") {
  const auto subsets = oracle::LexSubsets(12, 4);
  REQUIRE(subsets.size() == 495);
  for (std::size_t r = 0; r < subsets.size(); ++r) {
    CHECK(m22::RankSubset(subsets[r], 12) == mpz_class(static_cast<unsigned long>(r)));
    CHECK(m22::UnrankSubset(mpz_class(static_cast<unsigned long>(r)), 12, 4) == subsets[r]);
  }
  CHECK(m22::SubsetRankBits(12, 4) == 9);
  CHECK(m22::SubsetRankBits(7, 7) == 0);
  CHECK(CodeOf([] { m22::UnrankSubset(mpz_class(495), 12, 4); }) == ErrorCode::kMalformedPayload);
  CHECK(CodeOf([] { m22::RankSubset(std::vector<std::uint32_t>{3, 1}, 12); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("subset ranking round trip at scale") {
  std::mt19937_64 rng(12);
  std::vector<std::uint32_t> s;
  for (std::uint32_t i = 0; i < 100000; ++i) {
    if (rng() % 7 == 0) s.push_back(i);
  }
  const auto r = m22::RankSubset(s, 100000);
  CHECK(r < m22::Binomial(100000, s.size()));
  CHECK(m22::UnrankSubset(r, 100000, s.size()) == s);
}

TEST_CASE("codec round trip and index width") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 300; ++t) {
    const auto u = RandomPayload(rng);
    const auto bytes = m22::Encode(u);
    CHECK(m22::Decode(bytes) == u);
    const std::uint64_t index_bits = m22::HasIndexSet(u.scheme) ? m22::SubsetRankBits(u.dim, u.K) : 0;
    CHECK(m22::BodyBits(u) == index_bits + std::uint64_t{u.K} * u.rate);
    CHECK(bytes.size() == m22::kHeaderBytes + (m22::BodyBits(u) + 7) / 8);
  }
}

TEST_CASE("codec rejects damaged streams") {
  std::mt19937_64 rng(6);
  m22::CompressedUpdate u;
  do {
    u = RandomPayload(rng);
  } while (u.K == 0 || u.scheme == m22::Scheme::kSketch);
  auto bytes = m22::Encode(u);

  auto version = bytes;
  version[4] ^= 0x40;
  CHECK(CodeOf([&] { m22::Decode(version); }) == ErrorCode::kVersionMismatch);
  auto magic = bytes;
  magic[0] = 'X';
  CHECK(CodeOf([&] { m22::Decode(magic); }) == ErrorCode::kMalformedPayload);
  auto shorter = bytes;
  shorter.pop_back();
  CHECK(CodeOf([&] { m22::Decode(shorter); }) == ErrorCode::kTruncatedStream);
  CHECK(CodeOf([&] { m22::Decode(std::span(bytes).first(10)); }) == ErrorCode::kTruncatedStream);
  auto longer = bytes;
  longer.push_back(0);
  CHECK(CodeOf([&] { m22::Decode(longer); }) == ErrorCode::kMalformedPayload);
}

TEST_CASE("empty payload decodes to a zero vector") {
  const std::vector<double> g(64, 0.25);
  const auto upd = m22::CompressM22(g, m22::MakeBudget(64, 0.0, 1.0), 0.0, Family::kGenNorm, GenNormTable());
  CHECK(upd.K == 0);
  const auto back = m22::Decode(m22::Encode(upd));
  CHECK(m22::DecompressM22(back, GenNormTable()) == std::vector<double>(64, 0.0));
}

TEST_CASE("codec round trip preserves the dense vector") {
  const auto g = HeavyTailed(3000, 41);
  const auto upd = m22::CompressM22(g, m22::MakeBudget(3000, 1.0, 2.0), 2.0, Family::kGenNorm, GenNormTable());
  CHECK(m22::DecompressM22(m22::Decode(m22::Encode(upd)), GenNormTable()) == m22::DecompressM22(upd, GenNormTable()));
}
