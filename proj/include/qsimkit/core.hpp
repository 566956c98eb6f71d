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

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qsimkit {

template <typename Real>
using Complex = std::complex<Real>;

using cplx = std::complex<double>;
using cplxf = std::complex<float>;

template <typename Real>
using AmplitudeVector = Eigen::Matrix<Complex<Real>, Eigen::Dynamic, 1>;

template <typename Real>
using ComplexMatrix = Eigen::Matrix<Complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;

/// Ordinal of a basis state. Bit b is the outcome of the qubit mapped to index bit b.
using BasisIndex = std::uint64_t;

/// A qubit of an n-qubit register, always in [0, n).
using QubitIndex = int;

/// Raised when a requested resource plan cannot satisfy its budget.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a problem is too large for the selected engine.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BitPair {
  int first = 0;
  int second = 0;
  friend bool operator==(const BitPair&, const BitPair&) = default;
};

/// Throws std::invalid_argument unless every bit is in [0, max_bits) and no bit
/// appears twice across the pair list.
void validate_bit_pairs(std::span<const BitPair> swaps, int max_bits = 64);

/// Exchanges each listed bit pair of `index`. Pairs must be disjoint.
BasisIndex bit_permute(BasisIndex index, std::span<const BitPair> swaps);

/// Same as bit_permute but skips validation; callers validate once per batch.
inline BasisIndex bit_permute_unchecked(BasisIndex index, std::span<const BitPair> swaps) {
  for (const auto& p : swaps) {
    const BasisIndex x = ((index >> p.first) ^ (index >> p.second)) & 1u;
    index ^= (x << p.first) | (x << p.second);
  }
  return index;
}

/// Inserts zero bits at the sorted positions `bits` into `value`.
inline BasisIndex insert_zero_bits(BasisIndex value, std::span<const int> sorted_bits) {
  for (int b : sorted_bits) {
    const BasisIndex low = value & ((BasisIndex{1} << b) - 1);
    value = ((value >> b) << (b + 1)) | low;
  }
  return value;
}

namespace detail {

// Pairwise reduction with a fixed leaf size keeps the summation order
// independent of how callers split the work.
constexpr std::size_t kPairwiseLeaf = 256;

template <typename Accessor>
double pairwise_sum(std::size_t begin, std::size_t end, const Accessor& at) {
  const std::size_t len = end - begin;
  if (len <= kPairwiseLeaf) {
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) s += at(i);
    return s;
  }
  std::size_t half = (len / 2 + kPairwiseLeaf - 1) / kPairwiseLeaf * kPairwiseLeaf;
  return pairwise_sum(begin, begin + half, at) + pairwise_sum(begin + half, end, at);
}

}  // namespace detail

/// Sum of |a_i|^2 using pairwise reduction.
template <typename Scalar>
double norm_squared(std::span<const std::complex<Scalar>> v) {
  return detail::pairwise_sum(0, v.size(), [&](std::size_t i) {
    return static_cast<double>(std::norm(v[i]));
  });
}

template <typename Derived>
double norm_squared(const Eigen::MatrixBase<Derived>& v) {
  const auto& d = v.derived();
  return detail::pairwise_sum(0, static_cast<std::size_t>(d.size()), [&](std::size_t i) {
    return static_cast<double>(std::norm(d(static_cast<Eigen::Index>(i))));
  });
}

/// Formats the low `width` bits of `value` with bit width-1 first.
std::string to_bitstring(BasisIndex value, int width);

/// Inverse of to_bitstring.
BasisIndex from_bitstring(const std::string& bits);

/// Counter-based 64-bit generator: the value depends only on (key, counter).
std::uint64_t counter_hash(std::uint64_t key, std::uint64_t counter);

/// Uniform double in [0, 1) derived from counter_hash.
double counter_uniform(std::uint64_t key, std::uint64_t counter);

}  // namespace qsimkit
