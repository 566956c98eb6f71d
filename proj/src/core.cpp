// Copyright 2026 The qsimkit Authors
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

#include "qsimkit/core.hpp"

namespace qsimkit {

void validate_bit_pairs(std::span<const BitPair> swaps, int max_bits) {
  std::uint64_t seen = 0;
  for (const auto& p : swaps) {
    if (p.first < 0 || p.second < 0 || p.first >= max_bits || p.second >= max_bits) {
      throw std::invalid_argument("bit position out of range");
    }
    if (p.first == p.second) {
      throw std::invalid_argument("bit pair swaps a bit with itself");
    }
    const std::uint64_t mask = (std::uint64_t{1} << p.first) | (std::uint64_t{1} << p.second);
    if (seen & mask) throw std::invalid_argument("overlapping bit pairs");
    seen |= mask;
  }
}

BasisIndex bit_permute(BasisIndex index, std::span<const BitPair> swaps) {
  validate_bit_pairs(swaps);
  return bit_permute_unchecked(index, swaps);
}

std::string to_bitstring(BasisIndex value, int width) {
  std::string s(static_cast<std::size_t>(width), '0');
  for (int b = 0; b < width; ++b) {
    if ((value >> b) & 1u) s[static_cast<std::size_t>(width - 1 - b)] = '1';
  }
  return s;
}

BasisIndex from_bitstring(const std::string& bits) {
  if (bits.size() > 64) throw std::invalid_argument("bitstring longer than 64 bits");
  BasisIndex v = 0;
  for (char c : bits) {
    if (c != '0' && c != '1') throw std::invalid_argument("bitstring must contain only 0/1");
    v = (v << 1) | static_cast<BasisIndex>(c - '0');
  }
  return v;
}

std::uint64_t counter_hash(std::uint64_t key, std::uint64_t counter) {
  // Two rounds of the splitmix64 finalizer over a key-dependent counter stream.
  std::uint64_t z = key * 0x9E3779B97F4A7C15ull + counter * 0xD1B54A32D192ED03ull + 0x632BE59BD9B4E019ull;
  for (int round = 0; round < 2; ++round) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    z ^= z >> 31;
    z += key;
  }
  return z;
}

double counter_uniform(std::uint64_t key, std::uint64_t counter) {
  return static_cast<double>(counter_hash(key, counter) >> 11) * 0x1.0p-53;
}

}  // namespace qsimkit
