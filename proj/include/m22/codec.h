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

#ifndef M22_CODEC_H_
#define M22_CODEC_H_

#include <cstdint>
#include <span>
#include <vector>

#include "m22/compression.h"

namespace m22 {

inline constexpr std::uint8_t kWireVersion = 1;
inline constexpr std::size_t kHeaderBytes = 29;

/// Little-endian layout:
///   "M22\0" | version u8 | scheme u8 | d u32 | K u32 | rate u8 | M f32 |
///   shape u16 | mean f32 | std f32
/// followed by one LSB-first bitstream holding the lexicographic rank of the
/// index set in exactly ceil(log2 C(d, K)) bits and then K codes of `rate`
/// bits each, zero-padded to a byte boundary.
std::vector<std::uint8_t> Encode(const CompressedUpdate& upd);

// Throws kVersionMismatch, kTruncatedStream or kMalformedPayload.
CompressedUpdate Decode(std::span<const std::uint8_t> bytes);

// Size in bits of the body of an encoded payload (index rank plus codes).
std::uint64_t BodyBits(const CompressedUpdate& upd);

}  // namespace m22

#endif  // M22_CODEC_H_
