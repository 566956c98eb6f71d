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

#include "qsimkit/gates.hpp"

#include <span>
#include <vector>

namespace qsimkit {

struct FusionConfig {
  int max_fused_gate_size = 4;
  int max_fused_diagonal_gate_size = 6;
};

struct FusedCircuit {
  std::vector<Gate> gates;
  /// provenance[i] lists the source gate indices folded into gates[i], in
  /// application order.
  std::vector<std::vector<std::size_t>> provenance;
};

/// Greedy windowed fusion. Gates are scanned in time order; a gate joins the
/// newest open window that is not older than the last window touching any of
/// its qubits, provided the window stays within its size limit. Diagonal
/// gates go to diagonal windows unless a dense window already covers their
/// qubits. Gates larger than both limits pass through unchanged.
FusedCircuit fuse(std::span<const Gate> circuit, const FusionConfig& cfg);

/// Ordered product of `gates` (first gate applied first) expanded onto
/// `union_targets`; controls become projectors inside the matrix. Bit j of
/// the matrix index is union_targets[j].
DenseGate<double> fused_matrix(std::span<const Gate> gates, std::span<const QubitIndex> union_targets);

/// Product of diagonal gates as a diagonal permutation gate over `union_targets`.
PermutationGate<double> fused_diagonal(std::span<const Gate> gates, std::span<const QubitIndex> union_targets);

}  // namespace qsimkit
