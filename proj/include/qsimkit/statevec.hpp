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

/**
 * @file
 * Single-segment state-vector primitives. All operations work in place on a
 * contiguous amplitude array of length 2^n. Gates address qubits; the
 * state vector maps each qubit to an index bit through `bit_map`, which
 * starts as the identity (qubit k on index bit k, little-endian).
 *
 * Gate matrices are indexed so that bit j of a row/column index is the value
 * of `targets[j]`.
 */
#pragma once

#include "qsimkit/core.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

namespace qsimkit {

struct Control {
  QubitIndex qubit = 0;
  int value = 1;
  friend bool operator==(const Control&, const Control&) = default;
};

template <typename Real = double>
struct DenseGate {
  ComplexMatrix<Real> matrix;
  std::vector<QubitIndex> targets;
  std::vector<Control> controls;
  /// Cleared for observables and other non-unitary operators; norm
  /// invariants do not apply to them.
  bool unitary = true;

  int arity() const { return static_cast<int>(targets.size()); }
};

template <typename Real = double>
struct PermutationGate {
  /// Column j of the operator has its single non-zero `diagonal[j]` in row
  /// `permutation[j]`.
  std::vector<std::uint64_t> permutation;
  std::vector<Complex<Real>> diagonal;
  std::vector<QubitIndex> targets;
  std::vector<Control> controls;

  int arity() const { return static_cast<int>(targets.size()); }
  bool is_diagonal() const {
    for (std::size_t j = 0; j < permutation.size(); ++j) {
      if (permutation[j] != j) return false;
    }
    return true;
  }
};

enum class Pauli : char { I = 'I', X = 'X', Y = 'Y', Z = 'Z' };

struct PauliFactor {
  QubitIndex qubit = 0;
  Pauli op = Pauli::I;
};

struct PauliString {
  std::vector<PauliFactor> factors;
  cplx coefficient{1.0, 0.0};

  /// Parses e.g. "XIZ" where character i acts on qubit i.
  static PauliString from_string(const std::string& ops, cplx coefficient = {1.0, 0.0}) {
    PauliString p;
    p.coefficient = coefficient;
    for (std::size_t i = 0; i < ops.size(); ++i) {
      const char c = ops[i];
      if (c != 'I' && c != 'X' && c != 'Y' && c != 'Z') {
        throw std::invalid_argument("unknown Pauli symbol");
      }
      if (c != 'I') p.factors.push_back({static_cast<QubitIndex>(i), static_cast<Pauli>(c)});
    }
    return p;
  }
};

template <typename Real = double>
class StateVector {
 public:
  static constexpr int kMaxQubits = 40;

  /// Allocates |0...0> on `num_qubits` qubits.
  explicit StateVector(int num_qubits) : num_qubits_(num_qubits) {
    if (num_qubits < 0 || num_qubits > kMaxQubits) {
      throw CapacityError("state vector qubit count out of supported range");
    }
    amplitudes_ = AmplitudeVector<Real>::Zero(Eigen::Index{1} << num_qubits);
    amplitudes_(0) = Complex<Real>(1);
    bit_map_.resize(static_cast<std::size_t>(num_qubits));
    std::iota(bit_map_.begin(), bit_map_.end(), 0);
  }

  static StateVector from_amplitudes(AmplitudeVector<Real> amps) {
    const auto len = static_cast<std::uint64_t>(amps.size());
    if (len == 0 || !std::has_single_bit(len)) {
      throw std::invalid_argument("amplitude count must be a power of two");
    }
    StateVector sv(0);
    sv.num_qubits_ = std::countr_zero(len);
    sv.amplitudes_ = std::move(amps);
    sv.bit_map_.resize(static_cast<std::size_t>(sv.num_qubits_));
    std::iota(sv.bit_map_.begin(), sv.bit_map_.end(), 0);
    return sv;
  }

  int num_qubits() const { return num_qubits_; }
  std::uint64_t size() const { return static_cast<std::uint64_t>(amplitudes_.size()); }

  /// Raw amplitudes in physical (index-bit) order.
  AmplitudeVector<Real>& amplitudes() { return amplitudes_; }
  const AmplitudeVector<Real>& amplitudes() const { return amplitudes_; }

  const std::vector<int>& bit_map() const { return bit_map_; }
  int index_bit(QubitIndex q) const {
    if (q < 0 || q >= num_qubits_) throw std::out_of_range("qubit index out of range");
    return bit_map_[static_cast<std::size_t>(q)];
  }

  void set_bit_map(std::vector<int> bit_map) {
    if (static_cast<int>(bit_map.size()) != num_qubits_) {
      throw std::invalid_argument("bit map size mismatch");
    }
    std::vector<bool> seen(bit_map.size(), false);
    for (int b : bit_map) {
      if (b < 0 || b >= num_qubits_ || seen[static_cast<std::size_t>(b)]) {
        throw std::invalid_argument("bit map is not a permutation");
      }
      seen[static_cast<std::size_t>(b)] = true;
    }
    bit_map_ = std::move(bit_map);
  }

 private:
  int num_qubits_ = 0;
  AmplitudeVector<Real> amplitudes_;
  std::vector<int> bit_map_;
};

namespace detail {

struct GroupLayout {
  std::vector<std::uint64_t> offsets;  // 2^k offsets, bit j of m -> target index bit j
  std::vector<int> inserted;           // sorted index bits removed from the group counter
  std::uint64_t control_mask = 0;
  std::uint64_t control_value = 0;
  std::uint64_t groups = 0;
};

inline void check_qubits(int n, std::span<const QubitIndex> targets, std::span<const Control> controls) {
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  auto mark = [&](QubitIndex q) {
    if (q < 0 || q >= n) throw std::invalid_argument("qubit index out of range");
    if (used[static_cast<std::size_t>(q)]) {
      throw std::invalid_argument("targets and controls must be distinct qubits");
    }
    used[static_cast<std::size_t>(q)] = true;
  };
  for (auto q : targets) mark(q);
  for (const auto& c : controls) {
    mark(c.qubit);
    if (c.value != 0 && c.value != 1) throw std::invalid_argument("control value must be 0 or 1");
  }
}

template <typename Real>
GroupLayout make_layout(const StateVector<Real>& sv, std::span<const QubitIndex> targets,
                        std::span<const Control> controls, bool insert_controls) {
  check_qubits(sv.num_qubits(), targets, controls);
  GroupLayout layout;
  const std::size_t k = targets.size();
  layout.offsets.assign(std::size_t{1} << k, 0);
  for (std::size_t m = 0; m < layout.offsets.size(); ++m) {
    std::uint64_t off = 0;
    for (std::size_t j = 0; j < k; ++j) {
      if ((m >> j) & 1u) off |= std::uint64_t{1} << sv.index_bit(targets[j]);
    }
    layout.offsets[m] = off;
  }
  for (auto q : targets) layout.inserted.push_back(sv.index_bit(q));
  for (const auto& c : controls) {
    const int b = sv.index_bit(c.qubit);
    layout.control_mask |= std::uint64_t{1} << b;
    if (c.value) layout.control_value |= std::uint64_t{1} << b;
    if (insert_controls) layout.inserted.push_back(b);
  }
  std::sort(layout.inserted.begin(), layout.inserted.end());
  layout.groups = sv.size() >> layout.inserted.size();
  return layout;
}

// Calls fn(base) for every group base index whose controls are satisfied.
template <typename Fn>
void for_each_group(const GroupLayout& layout, Fn&& fn) {
  for (std::uint64_t g = 0; g < layout.groups; ++g) {
    fn(insert_zero_bits(g, layout.inserted) | layout.control_value);
  }
}

// Pauli string as (x mask, z mask, i^{#Y}) on physical index bits.
struct PauliMasks {
  std::uint64_t x = 0;
  std::uint64_t z = 0;
  cplx y_phase{1.0, 0.0};
};

template <typename Real>
PauliMasks pauli_masks(const StateVector<Real>& sv, const PauliString& p) {
  PauliMasks m;
  std::vector<bool> seen(static_cast<std::size_t>(sv.num_qubits()), false);
  int num_y = 0;
  for (const auto& f : p.factors) {
    if (f.qubit < 0 || f.qubit >= sv.num_qubits()) throw std::invalid_argument("qubit index out of range");
    if (seen[static_cast<std::size_t>(f.qubit)]) throw std::invalid_argument("duplicate qubit in Pauli string");
    seen[static_cast<std::size_t>(f.qubit)] = true;
    const std::uint64_t bit = std::uint64_t{1} << sv.index_bit(f.qubit);
    switch (f.op) {
      case Pauli::I: break;
      case Pauli::X: m.x |= bit; break;
      case Pauli::Y: m.x |= bit; m.z |= bit; ++num_y; break;
      case Pauli::Z: m.z |= bit; break;
    }
  }
  static constexpr std::array<cplx, 4> kPowersOfI{cplx{1, 0}, cplx{0, 1}, cplx{-1, 0}, cplx{0, -1}};
  m.y_phase = kPowersOfI[static_cast<std::size_t>(num_y % 4)];
  return m;
}

// P|i> = phase(i) |i ^ x>.
template <typename Real>
Complex<Real> pauli_phase(const PauliMasks& m, std::uint64_t i) {
  const double sign = (std::popcount(i & m.z) & 1) ? -1.0 : 1.0;
  const cplx ph = m.y_phase * sign;
  return {static_cast<Real>(ph.real()), static_cast<Real>(ph.imag())};
}

}  // namespace detail

/// Applies a dense 2^k x 2^k matrix to the target qubits where all controls
/// hold. Uses a single 2^k staging buffer; no second state vector.
template <typename Real>
void apply_matrix(StateVector<Real>& sv, const DenseGate<Real>& g) {
  const std::size_t dim = std::size_t{1} << g.targets.size();
  if (g.targets.empty()) throw std::invalid_argument("gate has no targets");
  if (static_cast<std::size_t>(g.matrix.rows()) != dim || static_cast<std::size_t>(g.matrix.cols()) != dim) {
    throw std::invalid_argument("gate matrix dimension does not match target count");
  }
  if (g.arity() > sv.num_qubits()) throw std::invalid_argument("gate arity exceeds register size");
  const auto layout = detail::make_layout(sv, g.targets, g.controls, true);

  std::vector<Complex<Real>> m(dim * dim);
  for (std::size_t r = 0; r < dim; ++r) {
    for (std::size_t c = 0; c < dim; ++c) {
      m[r * dim + c] = g.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
  }
  std::vector<Complex<Real>> buf(dim);
  Complex<Real>* a = sv.amplitudes().data();
  detail::for_each_group(layout, [&](std::uint64_t base) {
    for (std::size_t c = 0; c < dim; ++c) buf[c] = a[base + layout.offsets[c]];
    for (std::size_t r = 0; r < dim; ++r) {
      Complex<Real> s(0);
      const Complex<Real>* row = &m[r * dim];
      for (std::size_t c = 0; c < dim; ++c) s += row[c] * buf[c];
      a[base + layout.offsets[r]] = s;
    }
  });
}

template <typename Real>
void validate_permutation(const PermutationGate<Real>& g) {
  const std::size_t dim = std::size_t{1} << g.targets.size();
  if (g.permutation.size() != dim || g.diagonal.size() != dim) {
    throw std::invalid_argument("permutation/diagonal length does not match target count");
  }
  std::vector<bool> seen(dim, false);
  for (auto p : g.permutation) {
    if (p >= dim || seen[p]) throw std::invalid_argument("permutation is not a bijection");
    seen[p] = true;
  }
}

/// Applies permutation * diagonal without forming the dense matrix.
template <typename Real>
void apply_generalized_permutation(StateVector<Real>& sv, const PermutationGate<Real>& g) {
  if (g.targets.empty()) throw std::invalid_argument("gate has no targets");
  validate_permutation(g);
  const std::size_t dim = std::size_t{1} << g.targets.size();
  const auto layout = detail::make_layout(sv, g.targets, g.controls, true);
  Complex<Real>* a = sv.amplitudes().data();
  if (g.is_diagonal()) {
    detail::for_each_group(layout, [&](std::uint64_t base) {
      for (std::size_t j = 0; j < dim; ++j) a[base + layout.offsets[j]] *= g.diagonal[j];
    });
    return;
  }
  std::vector<Complex<Real>> buf(dim);
  detail::for_each_group(layout, [&](std::uint64_t base) {
    for (std::size_t j = 0; j < dim; ++j) buf[j] = a[base + layout.offsets[j]];
    for (std::size_t j = 0; j < dim; ++j) a[base + layout.offsets[g.permutation[j]]] = g.diagonal[j] * buf[j];
  });
}

/// sv <- exp(-i theta/2 P) sv. The string's coefficient is not used here.
template <typename Real>
void apply_pauli_rotation(StateVector<Real>& sv, double theta, const PauliString& p) {
  if (p.factors.empty()) throw std::invalid_argument("empty Pauli string");
  const auto masks = detail::pauli_masks(sv, p);
  const Real c = static_cast<Real>(std::cos(theta / 2));
  const Complex<Real> mis(0, static_cast<Real>(-std::sin(theta / 2)));
  Complex<Real>* a = sv.amplitudes().data();
  const std::uint64_t size = sv.size();
  if (masks.x == 0) {
    for (std::uint64_t i = 0; i < size; ++i) {
      a[i] = c * a[i] + mis * detail::pauli_phase<Real>(masks, i) * a[i];
    }
    return;
  }
  const int pivot = std::countr_zero(masks.x);
  const std::array<int, 1> ins{pivot};
  for (std::uint64_t g = 0; g < (size >> 1); ++g) {
    const std::uint64_t i = insert_zero_bits(g, ins);
    const std::uint64_t j = i ^ masks.x;
    const Complex<Real> ai = a[i];
    const Complex<Real> aj = a[j];
    // (P a)[i] = phase(j) a[j], (P a)[j] = phase(i) a[i]
    a[i] = c * ai + mis * detail::pauli_phase<Real>(masks, j) * aj;
    a[j] = c * aj + mis * detail::pauli_phase<Real>(masks, i) * ai;
  }
}

/// Marginal distribution over `qubits`; bit j of an outcome is qubits[j].
template <typename Real>
std::vector<double> probabilities(const StateVector<Real>& sv, std::span<const QubitIndex> qubits) {
  detail::check_qubits(sv.num_qubits(), qubits, {});
  if (qubits.size() > 30) throw CapacityError("marginal over more than 30 qubits");
  std::vector<int> bits;
  for (auto q : qubits) bits.push_back(sv.index_bit(q));
  std::vector<double> probs(std::size_t{1} << qubits.size(), 0.0);
  const Complex<Real>* a = sv.amplitudes().data();
  for (std::uint64_t i = 0; i < sv.size(); ++i) {
    std::uint64_t outcome = 0;
    for (std::size_t j = 0; j < bits.size(); ++j) outcome |= ((i >> bits[j]) & 1u) << j;
    probs[outcome] += static_cast<double>(std::norm(a[i]));
  }
  return probs;
}

/// Zeroes amplitudes inconsistent with `outcome` on `qubits` and renormalizes.
template <typename Real>
void collapse(StateVector<Real>& sv, std::span<const QubitIndex> qubits, BasisIndex outcome) {
  detail::check_qubits(sv.num_qubits(), qubits, {});
  std::uint64_t mask = 0, value = 0;
  for (std::size_t j = 0; j < qubits.size(); ++j) {
    const std::uint64_t bit = std::uint64_t{1} << sv.index_bit(qubits[j]);
    mask |= bit;
    if ((outcome >> j) & 1u) value |= bit;
  }
  auto& a = sv.amplitudes();
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if ((static_cast<std::uint64_t>(i) & mask) != value) a(i) = Complex<Real>(0);
  }
  const double nrm = norm_squared(a);
  if (nrm < 1e-12) throw std::domain_error("collapse onto a zero-probability outcome");
  a *= static_cast<Real>(1.0 / std::sqrt(nrm));
}

/// Measures `qubits` by inverse CDF over ascending outcomes using
/// `random_value` in [0, 1). Collapses the state when requested.
template <typename Real>
BasisIndex measure(StateVector<Real>& sv, std::span<const QubitIndex> qubits, double random_value,
                   bool collapse_state) {
  if (random_value < 0.0 || random_value >= 1.0) throw std::invalid_argument("random value must be in [0, 1)");
  const auto probs = probabilities(sv, qubits);
  const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  if (total < 1e-12) throw std::domain_error("degenerate state: norm below 1e-12");
  const double target = random_value * total;
  double cum = 0.0;
  BasisIndex outcome = 0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (probs[k] == 0.0) continue;
    outcome = k;
    cum += probs[k];
    if (cum > target) break;
  }
  if (collapse_state) collapse(sv, qubits, outcome);
  return outcome;
}

/// <psi|O|psi> for a dense observable; the state is not modified.
template <typename Real>
cplx expectation(const StateVector<Real>& sv, const DenseGate<Real>& obs) {
  const std::size_t dim = std::size_t{1} << obs.targets.size();
  if (static_cast<std::size_t>(obs.matrix.rows()) != dim || static_cast<std::size_t>(obs.matrix.cols()) != dim) {
    throw std::invalid_argument("observable dimension does not match target count");
  }
  const auto layout = detail::make_layout(sv, obs.targets, obs.controls, false);
  const Complex<Real>* a = sv.amplitudes().data();
  std::vector<Complex<Real>> buf(dim);
  cplx total(0.0);
  for (std::uint64_t g = 0; g < layout.groups; ++g) {
    const std::uint64_t base = insert_zero_bits(g, layout.inserted);
    for (std::size_t c = 0; c < dim; ++c) buf[c] = a[base + layout.offsets[c]];
    if ((base & layout.control_mask) != layout.control_value) {
      for (std::size_t c = 0; c < dim; ++c) total += static_cast<double>(std::norm(buf[c]));
      continue;
    }
    for (std::size_t r = 0; r < dim; ++r) {
      cplx s(0.0);
      for (std::size_t c = 0; c < dim; ++c) {
        s += cplx(obs.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c))) * cplx(buf[c]);
      }
      total += std::conj(cplx(buf[r])) * s;
    }
  }
  return total;
}

/// Sum of coefficient * <psi|P|psi> over the strings.
template <typename Real>
cplx expectation(const StateVector<Real>& sv, std::span<const PauliString> terms) {
  cplx total(0.0);
  const Complex<Real>* a = sv.amplitudes().data();
  for (const auto& p : terms) {
    const auto masks = detail::pauli_masks(sv, p);
    cplx s(0.0);
    for (std::uint64_t i = 0; i < sv.size(); ++i) {
      s += std::conj(cplx(a[i ^ masks.x])) * cplx(detail::pauli_phase<Real>(masks, i)) * cplx(a[i]);
    }
    total += p.coefficient * s;
  }
  return total;
}

/// Draws `shots` outcomes over `qubit_order` without touching the state.
/// Phase one builds cumulative weights, phase two maps counter-based uniform
/// variates keyed by (seed, shot) through the inverse CDF.
template <typename Real>
std::vector<BasisIndex> sample(const StateVector<Real>& sv, std::uint64_t shots,
                               std::span<const QubitIndex> qubit_order, std::uint64_t seed) {
  if (shots < 1) throw std::invalid_argument("shots must be >= 1");
  auto cdf = probabilities(sv, qubit_order);
  std::partial_sum(cdf.begin(), cdf.end(), cdf.begin());
  const double total = cdf.back();
  if (total < 1e-12) throw std::domain_error("degenerate state: norm below 1e-12");
  std::vector<BasisIndex> out(shots);
  for (std::uint64_t s = 0; s < shots; ++s) {
    const double r = counter_uniform(seed, s) * total;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), r);
    if (it == cdf.end()) --it;
    out[s] = static_cast<BasisIndex>(it - cdf.begin());
  }
  return out;
}

namespace detail {

inline void check_ordering(int n, std::span<const QubitIndex> ordering) {
  if (static_cast<int>(ordering.size()) != n) throw std::invalid_argument("ordering must list every qubit");
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (auto q : ordering) {
    if (q < 0 || q >= n || seen[static_cast<std::size_t>(q)]) {
      throw std::invalid_argument("ordering is not a permutation");
    }
    seen[static_cast<std::size_t>(q)] = true;
  }
}

template <typename Real>
std::uint64_t ordered_to_physical(const StateVector<Real>& sv, std::span<const QubitIndex> ordering, std::uint64_t o) {
  std::uint64_t i = 0;
  for (std::size_t j = 0; j < ordering.size(); ++j) {
    i |= ((o >> j) & 1u) << sv.index_bit(ordering[j]);
  }
  return i;
}

}  // namespace detail

/// Copies amplitudes [begin, end) of the state re-indexed so that bit j of the
/// returned ordinal is qubit ordering[j].
template <typename Real>
AmplitudeVector<Real> access(const StateVector<Real>& sv, std::span<const QubitIndex> ordering,
                             std::uint64_t begin, std::uint64_t end) {
  detail::check_ordering(sv.num_qubits(), ordering);
  if (begin > end || end > sv.size()) throw std::out_of_range("access range outside state vector");
  AmplitudeVector<Real> out(static_cast<Eigen::Index>(end - begin));
  for (std::uint64_t o = begin; o < end; ++o) {
    out(static_cast<Eigen::Index>(o - begin)) = sv.amplitudes()(
        static_cast<Eigen::Index>(detail::ordered_to_physical(sv, ordering, o)));
  }
  return out;
}

/// Setter counterpart of access: writes `values` at ordinals starting at `begin`.
template <typename Real>
void assign(StateVector<Real>& sv, std::span<const QubitIndex> ordering, std::uint64_t begin,
            const AmplitudeVector<Real>& values) {
  detail::check_ordering(sv.num_qubits(), ordering);
  const std::uint64_t end = begin + static_cast<std::uint64_t>(values.size());
  if (end > sv.size()) throw std::out_of_range("assign range outside state vector");
  for (std::uint64_t o = begin; o < end; ++o) {
    sv.amplitudes()(static_cast<Eigen::Index>(detail::ordered_to_physical(sv, ordering, o))) =
        values(static_cast<Eigen::Index>(o - begin));
  }
}

/// Amplitudes in logical order: bit q of the ordinal is qubit q.
template <typename Real>
AmplitudeVector<Real> logical_amplitudes(const StateVector<Real>& sv) {
  std::vector<QubitIndex> identity(static_cast<std::size_t>(sv.num_qubits()));
  std::iota(identity.begin(), identity.end(), 0);
  return access(sv, identity, 0, sv.size());
}

/// Moves the amplitude at physical index i to bit_permute(i, pairs) and
/// updates the qubit-to-bit map so the logical state is unchanged.
template <typename Real>
void swap_index_bits(StateVector<Real>& sv, std::span<const BitPair> pairs) {
  validate_bit_pairs(pairs, sv.num_qubits());
  if (pairs.empty()) return;
  Complex<Real>* a = sv.amplitudes().data();
  for (std::uint64_t i = 0; i < sv.size(); ++i) {
    const std::uint64_t j = bit_permute_unchecked(i, pairs);
    if (i < j) std::swap(a[i], a[j]);
  }
  auto map = sv.bit_map();
  for (auto& b : map) {
    for (const auto& p : pairs) {
      if (b == p.first) { b = p.second; break; }
      if (b == p.second) { b = p.first; break; }
    }
  }
  sv.set_bit_map(std::move(map));
}

/// Writes an 8-byte little-endian qubit count followed by interleaved
/// little-endian (re, im) float64 pairs in logical order.
template <typename Real>
void dump_state(const StateVector<Real>& sv, std::ostream& os) {
  static_assert(std::endian::native == std::endian::little, "dump format assumes a little-endian host");
  const std::uint64_t n = static_cast<std::uint64_t>(sv.num_qubits());
  os.write(reinterpret_cast<const char*>(&n), sizeof(n));
  const auto amps = logical_amplitudes(sv);
  for (Eigen::Index i = 0; i < amps.size(); ++i) {
    const double parts[2] = {static_cast<double>(amps(i).real()), static_cast<double>(amps(i).imag())};
    os.write(reinterpret_cast<const char*>(parts), sizeof(parts));
  }
  if (!os) throw std::runtime_error("failed to write state dump");
}

template <typename Real = double>
StateVector<Real> load_state(std::istream& is) {
  std::uint64_t n = 0;
  is.read(reinterpret_cast<char*>(&n), sizeof(n));
  if (!is || n > static_cast<std::uint64_t>(StateVector<Real>::kMaxQubits)) {
    throw std::runtime_error("invalid state dump header");
  }
  AmplitudeVector<Real> amps(Eigen::Index{1} << n);
  for (Eigen::Index i = 0; i < amps.size(); ++i) {
    double parts[2];
    is.read(reinterpret_cast<char*>(parts), sizeof(parts));
    if (!is) throw std::runtime_error("truncated state dump");
    amps(i) = Complex<Real>(static_cast<Real>(parts[0]), static_cast<Real>(parts[1]));
  }
  return StateVector<Real>::from_amplitudes(std::move(amps));
}

/// True when U^dagger U equals the identity within `tol` (max-abs entry).
template <typename Real>
bool is_unitary(const ComplexMatrix<Real>& m, double tol = 1e-8) {
  if (m.rows() != m.cols()) return false;
  const ComplexMatrix<Real> d = m.adjoint() * m - ComplexMatrix<Real>::Identity(m.rows(), m.cols());
  return d.cwiseAbs().maxCoeff() <= tol;
}

/// Builds a validated dense gate; rejects non-unitary matrices unless
/// `unitary` is false.
template <typename Real = double>
DenseGate<Real> make_dense_gate(ComplexMatrix<Real> matrix, std::vector<QubitIndex> targets,
                                std::vector<Control> controls = {}, bool unitary = true) {
  const Eigen::Index dim = Eigen::Index{1} << targets.size();
  if (matrix.rows() != dim || matrix.cols() != dim) {
    throw std::invalid_argument("gate matrix dimension does not match target count");
  }
  if (unitary && !is_unitary(matrix)) throw std::invalid_argument("gate matrix is not unitary within 1e-8");
  return {std::move(matrix), std::move(targets), std::move(controls), unitary};
}

/// Expands a permutation gate into its dense matrix (no controls folded in).
template <typename Real>
ComplexMatrix<Real> dense_matrix(const PermutationGate<Real>& g) {
  validate_permutation(g);
  const auto dim = static_cast<Eigen::Index>(g.permutation.size());
  ComplexMatrix<Real> m = ComplexMatrix<Real>::Zero(dim, dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    m(static_cast<Eigen::Index>(g.permutation[static_cast<std::size_t>(j)]), j) = g.diagonal[static_cast<std::size_t>(j)];
  }
  return m;
}

}  // namespace qsimkit
