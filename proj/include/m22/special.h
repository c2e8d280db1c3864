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

#ifndef M22_SPECIAL_H_
#define M22_SPECIAL_H_

#include <cstdint>

namespace m22 {

/// Natural log of the gamma function for x > 0 (Lanczos, g = 7, n = 9).
/// Relative accuracy is better than 1e-13 over the range used here.
/// Reentrant, unlike ::lgamma which writes the global signgam.
double LogGamma(double x);

/// log2 of the binomial coefficient C(n, k), computed through LogGamma.
/// Returns 0 for k == 0 or k == n.
double Log2Binomial(std::uint64_t n, std::uint64_t k);

}  // namespace m22

#endif  // M22_SPECIAL_H_
