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

#include "doctest.h"

#include "qsimkit/core.hpp"

#include <algorithm>
#include <random>
#include <set>

using namespace qsimkit;

namespace {

// Per-bit oracle: read each bit, write it to its partner position.
BasisIndex naive_permute(BasisIndex x, const std::vector<BitPair>& pairs) {
  BasisIndex out = x;
  for (const auto& p : pairs) {
    const BasisIndex a = (x >> p.first) & 1u, b = (x >> p.second) & 1u;
    out &= ~((BasisIndex{1} << p.first) | (BasisIndex{1} << p.second));
    out |= (a << p.second) | (b << p.first);
  }
  return out;
}

}  // namespace

TEST_CASE("bit_permute basic cases") {
  const std::vector<BitPair> one{{0, 1}};
  CHECK(bit_permute(0b10, one) == 0b01);
  CHECK(bit_permute(0x1234, std::vector<BitPair>{}) == 0x1234);
  const std::vector<BitPair> outer{{0, 2}};
  CHECK(bit_permute(0b110, outer) == 0b011);
  for (BasisIndex x = 0; x < 8; ++x) CHECK(bit_permute(x, outer) == naive_permute(x, outer));
}

TEST_CASE("bit_permute rejects overlapping pairs") {
  const std::vector<BitPair> overlap{{0, 1}, {1, 2}};
  CHECK_THROWS_AS(bit_permute(5, overlap), std::invalid_argument);
  const std::vector<BitPair> self{{3, 3}};
  CHECK_THROWS_AS(bit_permute(5, self), std::invalid_argument);
  const std::vector<BitPair> range{{0, 64}};
  CHECK_THROWS_AS(bit_permute(5, range), std::invalid_argument);
}

TEST_CASE("bit_permute is an involutive bijection") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 10;
    std::vector<int> bits(n);
    std::iota(bits.begin(), bits.end(), 0);
    std::shuffle(bits.begin(), bits.end(), rng);
    std::vector<BitPair> pairs;
    const int np = static_cast<int>(rng() % 5);
    for (int i = 0; i < np; ++i) pairs.push_back({bits[2 * i], bits[2 * i + 1]});
    std::set<BasisIndex> image;
    for (BasisIndex x = 0; x < (1u << n); ++x) {
      const auto y = bit_permute(x, pairs);
      CHECK(y < (1u << n));
      CHECK(bit_permute(y, pairs) == x);
      CHECK(y == naive_permute(x, pairs));
      image.insert(y);
    }
    CHECK(image.size() == (1u << n));
  }
}

TEST_CASE("norm_squared") {
  std::vector<cplx> basis{1, 0, 0, 0};
  CHECK(norm_squared(std::span<const cplx>(basis)) == 1.0);
  const double r = 1.0 / std::sqrt(2.0);
  std::vector<cplx> plus{r, r};
  CHECK(std::abs(norm_squared(std::span<const cplx>(plus)) - 1.0) < 1e-15);

  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  std::vector<cplx> big(std::size_t{1} << 20);
  for (auto& z : big) z = {normal(rng), normal(rng)};
  long double naive = 0;
  for (const auto& z : big) naive += static_cast<long double>(std::norm(z));
  const double pairwise = norm_squared(std::span<const cplx>(big));
  CHECK(std::abs(pairwise - static_cast<double>(naive)) / static_cast<double>(naive) < 1e-12);

  // Permutation invariance.
  auto shuffled = big;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  CHECK(std::abs(norm_squared(std::span<const cplx>(shuffled)) - pairwise) / pairwise < 1e-12);
}

TEST_CASE("bitstrings and counter RNG") {
  CHECK(to_bitstring(0b101, 3) == "101");
  CHECK(to_bitstring(1, 4) == "0001");
  CHECK(from_bitstring("0110") == 6);
  CHECK_THROWS(from_bitstring("01a"));
  CHECK(counter_hash(3, 9) == counter_hash(3, 9));
  CHECK(counter_hash(3, 9) != counter_hash(3, 10));
  double mean = 0;
  for (int i = 0; i < 100000; ++i) {
    const double u = counter_uniform(42, static_cast<std::uint64_t>(i));
    CHECK_FALSE((u < 0.0 || u >= 1.0));
    mean += u;
  }
  mean /= 100000;
  CHECK(std::abs(mean - 0.5) < 0.005);
}
