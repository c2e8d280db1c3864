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

#include "m22/enumerative.h"

#include <algorithm>

#include "m22/error.h"

namespace m22 {
namespace {

void CheckSubset(std::span<const std::uint32_t> subset, std::uint64_t d) {
  for (std::size_t i = 0; i < subset.size(); ++i) {
    if (subset[i] >= d || (i > 0 && subset[i] <= subset[i - 1])) {
      throw Error(ErrorCode::kInvalidArgument, "subset must be strictly increasing and below d");
    }
  }
}

}  // namespace

mpz_class Binomial(std::uint64_t n, std::uint64_t k) {
  mpz_class out;
  if (k > n) return out;
  mpz_bin_uiui(out.get_mpz_t(), n, k);
  return out;
}

std::uint64_t SubsetRankBits(std::uint64_t d, std::uint64_t K) {
  const mpz_class c = Binomial(d, K);
  if (c <= 1) return 0;
  const mpz_class top = c - 1;
  return mpz_sizeinbase(top.get_mpz_t(), 2);
}

// The scans below walk c downward from d - 1 while keeping B = C(c, i)
// current through C(c - 1, i) = C(c, i) (c - i) / c and
// C(c - 1, i - 1) = C(c, i) i / c, so every step is one small-integer
// multiply and one exact division.

mpz_class RankColex(std::span<const std::uint32_t> subset, std::uint64_t d) {
  CheckSubset(subset, d);
  const std::uint64_t K = subset.size();
  mpz_class rank = 0;
  if (K == 0) return rank;
  std::uint64_t c = d - 1;
  std::uint64_t i = K;
  mpz_class B = Binomial(c, i);
  for (std::size_t pos = K; pos-- > 0;) {
    const std::uint64_t target = subset[pos];
    while (c > target) {
      if (B != 0) {
        B *= (c - i);
        mpz_divexact_ui(B.get_mpz_t(), B.get_mpz_t(), c);
      }
      --c;
    }
    rank += B;
    if (i == 1 || c == 0) break;
    if (B != 0) {
      B *= i;
      mpz_divexact_ui(B.get_mpz_t(), B.get_mpz_t(), c);
    }
    --c;
    --i;
  }
  return rank;
}

std::vector<std::uint32_t> UnrankColex(const mpz_class& rank, std::uint64_t d, std::uint64_t K) {
  if (K > d || rank < 0 || rank >= Binomial(d, K)) {
    throw Error(ErrorCode::kMalformedPayload, "subset rank out of range");
  }
  std::vector<std::uint32_t> out(K);
  if (K == 0) return out;
  mpz_class r = rank;
  std::uint64_t c = d - 1;
  std::uint64_t i = K;
  mpz_class B = Binomial(c, i);
  while (true) {
    // Largest c with C(c, i) <= r; C(i - 1, i) = 0 guarantees termination.
    while (B > r) {
      B *= (c - i);
      mpz_divexact_ui(B.get_mpz_t(), B.get_mpz_t(), c);
      --c;
    }
    out[i - 1] = static_cast<std::uint32_t>(c);
    r -= B;
    if (i == 1) break;
    if (B == 0) {
      // Only the forced tail {0, ..., i - 2} remains.
      for (std::uint64_t j = 0; j + 1 < i; ++j) out[j] = static_cast<std::uint32_t>(j);
      break;
    }
    B *= i;
    mpz_divexact_ui(B.get_mpz_t(), B.get_mpz_t(), c);
    --c;
    --i;
  }
  return out;
}

// Lex order on increasing tuples reverses colex order of the reflected set
// {d - 1 - s}, which gives rank_lex = C(d, K) - 1 - rank_colex(reflected).
mpz_class RankSubset(std::span<const std::uint32_t> subset, std::uint64_t d) {
  CheckSubset(subset, d);
  std::vector<std::uint32_t> reflected(subset.size());
  for (std::size_t j = 0; j < subset.size(); ++j) {
    reflected[subset.size() - 1 - j] = static_cast<std::uint32_t>(d - 1 - subset[j]);
  }
  return Binomial(d, subset.size()) - 1 - RankColex(reflected, d);
}

std::vector<std::uint32_t> UnrankSubset(const mpz_class& rank, std::uint64_t d, std::uint64_t K) {
  const mpz_class total = Binomial(d, K);
  if (K > d || rank < 0 || rank >= total) {
    throw Error(ErrorCode::kMalformedPayload, "subset rank out of range");
  }
  const std::vector<std::uint32_t> reflected = UnrankColex(total - 1 - rank, d, K);
  std::vector<std::uint32_t> out(K);
  for (std::size_t j = 0; j < K; ++j) {
    out[K - 1 - j] = static_cast<std::uint32_t>(d - 1 - reflected[j]);
  }
  return out;
}

}  // namespace m22
