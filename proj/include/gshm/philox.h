//
// Copyright 2026 The GSHM Accounting Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// Philox4x32-10 counter-based generator (Salmon et al., "Parallel random
// numbers: as easy as 1, 2, 3", SC 2011) and the per-group noise stream built
// on it. Output depends only on (key, counter), so each group's noise is a
// pure function of the release seed and the group id.

#ifndef GSHM_PHILOX_H_
#define GSHM_PHILOX_H_

#include <array>
#include <cstdint>
#include <string_view>

#include "gshm/normal.h"

namespace gshm {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

inline PhiloxCounter Philox4x32(PhiloxCounter ctr, PhiloxKey key) {
  constexpr std::uint32_t kMul0 = 0xD2511F53;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
           static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
           static_cast<std::uint32_t>(p0)};
  }
  return ctr;
}

// 64-bit FNV-1a; spreads group ids over the counter space.
inline std::uint64_t Fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

// Deterministic noise for one group. Draw k is a pure function of
// (seed, group_id, k); draw 0 is the count noise, draws 1.. the aggregates.
class GroupNoiseStream {
 public:
  GroupNoiseStream(std::uint64_t seed, std::string_view group_id)
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)},
        group_hash_(Fnv1a64(group_id)) {}

  std::uint64_t Bits(std::uint64_t draw) const {
    const PhiloxCounter block = Philox4x32(
        {static_cast<std::uint32_t>(draw >> 1),
         static_cast<std::uint32_t>(draw >> 33),
         static_cast<std::uint32_t>(group_hash_),
         static_cast<std::uint32_t>(group_hash_ >> 32)},
        key_);
    const int half = static_cast<int>(draw & 1) * 2;
    return (static_cast<std::uint64_t>(block[half]) << 32) | block[half + 1];
  }

  // Uniform on the open interval (0, 1) with 53 random bits.
  double Uniform(std::uint64_t draw) const {
    return (static_cast<double>(Bits(draw) >> 11) + 0.5) * 0x1.0p-53;
  }

  // N(0, 1) by inversion.
  double Gaussian(std::uint64_t draw) const {
    return StdNormalQuantile(Uniform(draw));
  }

 private:
  PhiloxKey key_;
  std::uint64_t group_hash_;
};

}  // namespace gshm

#endif  // GSHM_PHILOX_H_
