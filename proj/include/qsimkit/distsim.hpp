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
 * A state vector split into 2^g equal segments, each owned by one worker
 * thread. Physical index bits [0, n-g) are local to a segment; bits
 * [n-g, n) select the segment. Gates run segment-locally, so any target
 * qubit sitting on a global bit is first swapped onto a local bit.
 */
#pragma once

#include "qsimkit/gates.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace qsimkit {

struct TransferStats {
  std::uint64_t num_reorders = 0;
  /// Amplitudes that left their segment.
  std::uint64_t amplitudes_moved = 0;
  /// Subset of amplitudes_moved whose source and destination segments are
  /// owned by different workers.
  std::uint64_t inter_worker_amplitudes = 0;
  std::uint64_t exchanges = 0;
};

/// One two-party exchange: segment_a sends its elements with `local_bit` = 1
/// and receives segment_b's elements with `local_bit` = 0 (same remaining
/// local bits). For a global/global swap local_bit is -1 and whole segments
/// trade places.
struct SegmentExchange {
  int segment_a = 0;
  int segment_b = 0;
  int local_bit = -1;
  std::uint64_t amplitudes = 0;  // moved in each direction
};

struct ReorderPlan {
  std::vector<BitPair> swaps;                       // physical bit pairs
  std::vector<std::vector<SegmentExchange>> phases;  // one phase per swap pair
};

class SegmentedStateVector {
 public:
  /// |0...0> over `num_qubits`, split by `global_bits` across `workers`.
  SegmentedStateVector(int num_qubits, int global_bits, int workers = 1);

  static SegmentedStateVector scatter(const StateVector<double>& sv, int global_bits, int workers = 1);

  int num_qubits() const { return num_qubits_; }
  int global_bits() const { return global_bits_; }
  int local_bits() const { return num_qubits_ - global_bits_; }
  int workers() const { return workers_; }
  int num_segments() const { return static_cast<int>(segments_.size()); }
  int worker_of(int segment) const { return segment % workers_; }

  const AmplitudeVector<double>& segment(int s) const { return segments_.at(static_cast<std::size_t>(s)).amplitudes(); }
  /// qubit -> physical bit.
  const std::vector<int>& qubit_map() const { return qubit_map_; }
  bool is_global_bit(int physical_bit) const { return physical_bit >= local_bits(); }

  /// Segments concatenated in physical order.
  AmplitudeVector<double> concatenated() const;
  /// Amplitudes in logical order (bit q of the ordinal is qubit q).
  AmplitudeVector<double> gather() const;

  /// Exchange schedule for swapping the given physical bit pairs.
  ReorderPlan plan_reorder(std::span<const BitPair> pairs) const;

  /// Moves the amplitude at physical index i to bit_permute(i, pairs) and
  /// updates qubit_map so the logical state is unchanged.
  void distributed_index_bit_swap(std::span<const BitPair> pairs);

  /// Applies a gate, first swapping global target qubits onto the local bits
  /// whose qubits are next used furthest in `upcoming`.
  void apply(const Gate& g, std::span<const Gate> upcoming = {});

  TransferStats transfer_stats() const { return stats_; }

 private:
  void execute_phase(const std::vector<SegmentExchange>& phase);

  int num_qubits_ = 0;
  int global_bits_ = 0;
  int workers_ = 1;
  std::vector<StateVector<double>> segments_;
  std::vector<int> qubit_map_;
  TransferStats stats_;
};

inline void apply_gate_distributed(SegmentedStateVector& ssv, const Gate& g) { ssv.apply(g); }

/// Runs a whole circuit with lookahead-driven reordering.
void simulate_distributed(SegmentedStateVector& ssv, std::span<const Gate> circuit);

}  // namespace qsimkit
