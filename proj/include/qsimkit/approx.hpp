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
 * Tensor QR and truncated SVD over labeled modes, the two-site gate split,
 * and a matrix product state simulator built on them.
 */
#pragma once

#include "qsimkit/gates.hpp"
#include "qsimkit/tn.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qsimkit {

/// Where the singular values go after the decomposition.
enum class SvdPartition { kNone, kToU, kToV, kSplitSqrt };

struct SvdPolicy {
  std::optional<Extent> max_extent;
  std::optional<double> abs_cutoff;
  /// Relative to the largest singular value.
  std::optional<double> rel_cutoff;
  SvdPartition partition = SvdPartition::kNone;
  /// Rescale the kept singular values to unit 2-norm.
  bool renormalize = false;

  void validate() const;
};

struct SvdInfo {
  Extent full_extent = 0;
  Extent kept_extent = 0;
  /// Sum of the squared discarded singular values.
  double discarded_weight = 0;
  /// Largest singular value before truncation.
  double largest = 0;
};

struct QrResult {
  Tensor q;  // left modes + bond
  Tensor r;  // bond + right modes
};

/// Q has orthonormal columns over the new bond and R has a real
/// non-negative diagonal. The bond extent is min(rows, cols).
QrResult tensor_qr(const Tensor& t, std::span<const Label> left, std::span<const Label> right, Label bond);

struct SvdResult {
  Tensor u;  // left modes + bond
  std::vector<double> s;
  Tensor v;  // bond + right modes
  SvdInfo info;
};

/// t = U diag(S) V over the bond, truncated per `policy`. Each row of V has
/// its first non-negligible entry real and positive. Throws InfeasibleError
/// when the policy discards every singular value.
SvdResult tensor_svd(const Tensor& t, std::span<const Label> left, std::span<const Label> right, Label bond,
                     const SvdPolicy& policy = {});

enum class SplitAlgorithm { kDirect, kReduced };

struct GateSplitResult {
  Tensor a;
  Tensor b;
  std::vector<double> s;
  SvdInfo info;
};

/// Applies a two-site gate to tensors `a` and `b`, which share exactly one
/// bond label, and factorizes the result back onto two tensors.
///
/// `gate` has modes [out_a, out_b, in_a, in_b] with in_a a mode of `a` and
/// in_b a mode of `b`. The results keep the layout of their inputs with
/// in_* renamed to out_* and the bond label reused at its new extent.
/// Singular values are folded per policy.partition; kNone folds them into b.
GateSplitResult gate_split(const Tensor& a, const Tensor& b, const Tensor& gate, SplitAlgorithm algorithm,
                           const SvdPolicy& policy = {});

/// Chain of rank-3 site tensors (left bond, physical, right bond).
class MPSState {
 public:
  /// |0...0> on n qubits.
  explicit MPSState(int num_qubits);

  int num_qubits() const { return static_cast<int>(sites_.size()); }
  const Tensor& site(int q) const { return sites_.at(static_cast<std::size_t>(q)); }
  /// n + 1 extents; the two boundary bonds are 1.
  std::vector<Extent> bond_extents() const;
  Extent max_bond() const;
  /// Orthogonality center, or -1 when none is known.
  int center() const { return center_; }
  /// Accumulated squared weight discarded by truncations.
  double discarded_weight() const { return discarded_; }

  /// Moves the orthogonality center with QR sweeps.
  void move_center(int q);
  /// Replaces a site; the orthogonality center is forgotten.
  void set_site(int q, Tensor t);

  /// Mode labels used by the sites: bond i sits left of site i.
  Label bond_label(int i) const { return i; }
  Label phys_label(int q) const { return num_qubits() + 1 + q; }

 private:
  friend void mps_apply(MPSState&, const DenseGate<double>&, const SvdPolicy&, SplitAlgorithm);
  friend MPSState load_mps(std::istream&);

  Label scratch_label() const { return 2 * num_qubits() + 2; }
  void shift_right(int q);
  void shift_left(int q);
  void apply_one(int q, const Eigen::Matrix2cd& g, bool unitary);
  void apply_adjacent(int q, const Eigen::Matrix4cd& g, const SvdPolicy& policy, SplitAlgorithm algorithm);

  std::vector<Tensor> sites_;
  int center_ = 0;
  double discarded_ = 0;
};

/// One- and two-qubit gates, controls included in the count. Non-adjacent
/// pairs are routed next to each other with swap gates and back.
void mps_apply(MPSState& m, const DenseGate<double>& g, const SvdPolicy& policy = {},
               SplitAlgorithm algorithm = SplitAlgorithm::kReduced);
void mps_apply(MPSState& m, const Gate& g, const SvdPolicy& policy = {}, SplitAlgorithm algorithm = SplitAlgorithm::kReduced);

cplx mps_amplitude(const MPSState& m, BasisIndex bits);
/// Bitstring with the highest qubit first.
cplx mps_amplitude(const MPSState& m, const std::string& bits);

/// All 2^n amplitudes, little-endian. Throws CapacityError above 30 qubits.
TensorData mps_to_vector(const MPSState& m);

double mps_norm_squared(const MPSState& m);

/// Draws shots from sequential conditional probabilities; deterministic per seed.
std::vector<BasisIndex> mps_sample(const MPSState& m, std::uint64_t shots, std::uint64_t seed);

/// One JSON header line followed by each site's raw little-endian complex128
/// data, row-major over (left, physical, right).
void save_mps(const MPSState& m, std::ostream& os);
MPSState load_mps(std::istream& is);

}  // namespace qsimkit
