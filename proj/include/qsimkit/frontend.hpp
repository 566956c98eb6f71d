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
 * Circuit IR, benchmark circuit generators, and conversion of circuits into
 * tensor networks for amplitudes, reduced density matrices and Pauli
 * expectation values, with reverse-lightcone pruning.
 */
#pragma once

#include "qsimkit/gates.hpp"
#include "qsimkit/pathfinder.hpp"
#include "qsimkit/tn.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace qsimkit {

/// One circuit operation. Named gates take their matrix from `name` and
/// `params`; the name "matrix" takes it from `matrix` instead.
///
/// Names: h x y z s sdg t tdg rx ry rz phase (1 qubit); cx cz cphase swap
/// rzz (2 qubits). Any operation may carry extra controls.
struct Operation {
  std::string name;
  std::vector<double> params;
  std::vector<QubitIndex> targets;
  std::vector<Control> controls;
  std::optional<gates::Matrix> matrix;
};

struct Circuit {
  int num_qubits = 0;
  std::vector<Operation> ops;

  std::size_t size() const { return ops.size(); }
  /// Throws std::invalid_argument on bad indices, arities or parameters.
  void validate() const;
};

/// Matrix over the operation's targets (controls not included).
gates::Matrix operation_matrix(const Operation& op);
DenseGate<double> to_dense_gate(const Operation& op);
std::vector<Gate> to_gates(const Circuit& c);

/// H on every qubit, controlled phases pi/2^d, then floor(n/2) swaps. On
/// little-endian indices it maps |x> to sum_y exp(2 pi i x y / 2^n)|y>/sqrt(2^n).
Circuit gen_qft(int n);

/// `depth` layers of floor(n/2) Haar-random SU(4) gates on a uniformly
/// random perfect matching.
Circuit gen_qv(int n, int depth, std::uint64_t seed);

struct Graph {
  int num_nodes = 0;
  std::vector<std::pair<int, int>> edges;
  /// Empty means unit weights.
  std::vector<double> weights;

  void validate() const;
};

/// Erdos-Renyi G(n, p) graph.
Graph random_graph(int num_nodes, double edge_probability, std::uint64_t seed);

/// H on every node, then p rounds of exp(-i gamma w Z Z) per edge (as rzz)
/// and exp(-i beta X) per node (as rx). `params` is {gamma_1..gamma_p,
/// beta_1..beta_p}; when empty, angles are drawn uniformly from the seed.
Circuit gen_qaoa_maxcut(const Graph& graph, int p, std::span<const double> params = {}, std::uint64_t seed = 0);

/// Schema {"n": int, "ops": [{"name", "params", "targets", "controls",
/// "matrix"}]}. Controls are qubit indices, or [qubit, value] pairs for
/// zero-controls; "matrix" is row-major [[re, im], ...].
std::string circuit_to_json(const Circuit& c);
Circuit circuit_from_json(const std::string& text);
Circuit load_circuit(std::istream& is);

/// What a converted network computes.
struct ConversionTarget {
  enum class Kind { kStateVector, kAmplitude, kBatchedAmplitudes, kRdm, kExpectation };

  Kind kind = Kind::kStateVector;
  /// kAmplitude: n bits, highest qubit first. kBatchedAmplitudes: the same
  /// with '*' marking open qubits.
  std::string bits;
  /// kRdm: qubits left open.
  std::vector<QubitIndex> kept;
  /// kRdm: qubits projected onto a basis value instead of traced out.
  std::map<QubitIndex, int> projected;
  /// kExpectation: one output entry per string, coefficient included.
  std::vector<PauliString> paulis;
  /// Drop gates outside the reverse causal cone (kRdm and kExpectation).
  bool lightcone = false;

  static ConversionTarget state_vector();
  static ConversionTarget amplitude(std::string bits);
  static ConversionTarget batched(std::string pattern);
  static ConversionTarget rdm(std::vector<QubitIndex> kept, std::map<QubitIndex, int> projected = {});
  static ConversionTarget expectation(std::vector<PauliString> paulis);
};

/**
 * Builds a network with bound data whose contraction is the target value.
 *
 * Output layouts (row-major, each qubit group listed highest qubit first, so
 * flat indices are little-endian basis indices):
 *  - state vector: all 2^n amplitudes;
 *  - amplitude: a scalar;
 *  - batched: amplitudes over the open qubits;
 *  - rdm: rho(row, col) with row and col over the kept qubits, ascending,
 *    unnormalized when qubits are projected;
 *  - expectation: one value per Pauli string.
 *
 * Gate tensors are constant; the |0> inputs and closing projectors are not.
 * Throws std::invalid_argument for inconsistent targets, including
 * `lightcone` on a state-vector or amplitude target.
 */
TensorNetwork circuit_to_network(const Circuit& c, const ConversionTarget& target);

/// Qubits whose outcome the target observes.
std::vector<QubitIndex> observed_qubits(const Circuit& c, const ConversionTarget& target);

/// Circuit with the gates outside the reverse causal cone of the observed
/// qubits removed. Each removed gate cancels against its conjugate.
Circuit lightcone_circuit(const Circuit& c, const ConversionTarget& target);

/// circuit_to_network of the lightcone circuit; qubits outside the cone
/// contribute no tensors.
TensorNetwork apply_lightcone(const Circuit& c, const ConversionTarget& target);

/// Contracts a bound network along a find_path path; result modes follow
/// tn.output().
Tensor contract_network(const TensorNetwork& tn, const OptimizerConfig& cfg = {});

}  // namespace qsimkit
