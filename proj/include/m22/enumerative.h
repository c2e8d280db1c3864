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

#ifndef M22_ENUMERATIVE_H_
#define M22_ENUMERATIVE_H_

#include <cstdint>
#include <span>
#include <vector>

#include <gmpxx.h>

namespace m22 {

// Exact C(n, k); zero when k > n.
mpz_class Binomial(std::uint64_t n, std::uint64_t k);

// Bits needed for any rank of a K-subset of [d]: ceil(log2 C(d, K)).
std::uint64_t SubsetRankBits(std::uint64_t d, std::uint64_t K);

/// Lexicographic rank of a strictly increasing K-subset of [0, d) among all
/// K-subsets, in [0, C(d, K)).
mpz_class RankSubset(std::span<const std::uint32_t> subset, std::uint64_t d);

// Inverse of RankSubset. Throws kMalformedPayload when rank >= C(d, K).
std::vector<std::uint32_t> UnrankSubset(const mpz_class& rank, std::uint64_t d, std::uint64_t K);

// Colex rank sum_i C(c_i, i + 1) and its inverse; building blocks of the above.
mpz_class RankColex(std::span<const std::uint32_t> subset, std::uint64_t d);
std::vector<std::uint32_t> UnrankColex(const mpz_class& rank, std::uint64_t d, std::uint64_t K);

}  // namespace m22

#endif  // M22_ENUMERATIVE_H_
